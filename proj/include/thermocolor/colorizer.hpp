#pragma once

// Encoder / intermediate / decoder network that maps a thermal grayscale
// image to an RGB color mask, its ablation variants, training and
// checkpoints.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "thermocolor/errors.hpp"
#include "thermocolor/fileio.hpp"
#include "thermocolor/image.hpp"
#include "thermocolor/nn/adamax.hpp"
#include "thermocolor/nn/ops.hpp"
#include "thermocolor/nn/tensor.hpp"

namespace thermocolor {

using nn::Mode;
using nn::Shape;
using nn::Tensor;

enum class Variant : std::uint32_t {
    Proposed = 0,
    TwoIntermediate = 1,
    SkipConnections = 2,
    TwoIntermediateSkip = 3,
    DownTo1x1 = 4,
};

inline std::string_view to_string(Variant v) {
    switch (v) {
    case Variant::Proposed: return "proposed";
    case Variant::TwoIntermediate: return "two-intermediate";
    case Variant::SkipConnections: return "skip";
    case Variant::TwoIntermediateSkip: return "two-intermediate-skip";
    case Variant::DownTo1x1: return "down-to-1x1";
    }
    return "unknown";
}

inline Variant parse_variant(std::string_view s) {
    for (auto v : {Variant::Proposed, Variant::TwoIntermediate, Variant::SkipConnections, Variant::TwoIntermediateSkip,
                   Variant::DownTo1x1})
        if (to_string(v) == s) return v;
    throw Error("unknown model variant '" + std::string(s) + "'");
}

/// Network variant plus working resolution. `width_divisor` scales every
/// block depth down (except the 1-channel input conv and the 3-channel
/// output conv) to build reduced clones of the same topology.
struct ModelSpec {
    Variant variant = Variant::Proposed;
    std::size_t input_size = 200;
    std::size_t width_divisor = 1;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

enum class BlockKind {
    InputConv,   // conv stride 1 + ELU
    Half,        // conv stride 2 + BN + ReLU
    Same,        // conv stride 1 + BN + ReLU
    Double,      // transposed conv stride 2 (+ crop) + ELU + BN + dropout
    OutputConv,  // conv stride 1 + sigmoid
};

/// One row of the architecture tables: what a block is and the output
/// shape it must produce.
struct BlockPlan {
    std::string name;
    BlockKind kind = BlockKind::Same;
    std::size_t in_channels = 0;  // including concatenated skip channels
    std::size_t depth = 0;
    std::size_t out_size = 0;  // square spatial extent
    int skip_from = -1;        // block whose output is concatenated onto this block's input
};

inline constexpr double default_dropout_rate = 0.5;
inline constexpr std::size_t max_depth = 2048;

/// Block list of a variant, with every expected output shape derived from
/// the halving/doubling rules alone.
inline std::vector<BlockPlan> plan_model(const ModelSpec& spec) {
    if (spec.input_size < 2) throw ShapeError("model input must be at least 2x2");
    if (spec.width_divisor < 1) throw ShapeError("width divisor must be >= 1");
    const auto d = [&](std::size_t depth) { return std::max<std::size_t>(1, depth / spec.width_divisor); };
    const bool skips = spec.variant == Variant::SkipConnections || spec.variant == Variant::TwoIntermediateSkip;
    const bool two_mid = spec.variant == Variant::TwoIntermediate || spec.variant == Variant::TwoIntermediateSkip;
    const bool to_1x1 = spec.variant == Variant::DownTo1x1;

    std::vector<BlockPlan> plan;
    std::size_t size = spec.input_size;
    std::size_t channels = 1;
    auto add = [&](std::string name, BlockKind kind, std::size_t depth, std::size_t out_size, int skip = -1) {
        std::size_t in = channels;
        if (skip >= 0) in += plan[static_cast<std::size_t>(skip)].depth;
        plan.push_back({std::move(name), kind, in, depth, out_size, skip});
        channels = depth;
        size = out_size;
        return static_cast<int>(plan.size() - 1);
    };
    const auto half = [](std::size_t n) { return (n + 1) / 2; };

    // Encoder
    add("block01", BlockKind::InputConv, 1, size);
    add("block02", BlockKind::Half, d(128), half(size));
    const int enc100 = add("block03", BlockKind::Same, d(128), size);
    add("block04", BlockKind::Half, d(256), half(size));
    const int enc50 = add("block05", BlockKind::Same, d(256), size);
    add("block06", BlockKind::Half, d(512), half(size));
    const int enc25 = add("block07", BlockKind::Same, d(512), size);

    // Extension down to a 1x1 bottleneck, doubling depth up to the cap.
    std::vector<std::pair<std::size_t, std::size_t>> ladder;  // (size, depth) of each level above the next
    if (to_1x1) {
        std::size_t depth = 512;
        int level = 1;
        while (size > 1) {
            ladder.emplace_back(size, channels);
            depth = std::min(depth * 2, max_depth);
            add("down" + std::to_string(level++), BlockKind::Half, d(depth), half(size));
        }
    }

    // Intermediate
    const std::vector<std::size_t> mid =
        two_mid ? std::vector<std::size_t>{1024, 512} : std::vector<std::size_t>{1024, 2048, 2048, 1024, 512};
    for (std::size_t i = 0; i < mid.size(); ++i) {
        const std::size_t number = 8 + i;
        add((number < 10 ? "block0" : "block") + std::to_string(number), BlockKind::Same, d(mid[i]), size);
    }

    // Mirror of the extension on the way up; doubled sizes are cropped back
    // onto the encoder's odd sizes.
    if (to_1x1) {
        int level = static_cast<int>(ladder.size());
        for (auto it = ladder.rbegin(); it != ladder.rend(); ++it)
            add("up" + std::to_string(level--), BlockKind::Double, it->second, it->first);
    }

    // Decoder
    const std::size_t size50 = plan[static_cast<std::size_t>(enc50)].out_size;
    const std::size_t size100 = plan[static_cast<std::size_t>(enc100)].out_size;
    add("block13", BlockKind::Double, d(256), size50, skips ? enc25 : -1);
    add("block14", BlockKind::Same, d(256), size50, skips ? enc50 : -1);
    add("block15", BlockKind::Double, d(128), size100);
    add("block16", BlockKind::Same, d(128), size100, skips ? enc100 : -1);
    add("block17", BlockKind::Double, d(64), spec.input_size);
    add("block18", BlockKind::OutputConv, 3, spec.input_size);
    return plan;
}

// ---------------------------------------------------------------------------
// Layers

/// A named, serializable array owned by a layer.
struct StateBlock {
    std::string name;
    Shape shape;
    std::vector<double>* value = nullptr;
    std::vector<double>* grad = nullptr;  // null for non-trainable state
};

class Layer {
public:
    explicit Layer(std::string name) : name_(std::move(name)) {}
    virtual ~Layer() = default;
    Layer(const Layer&) = delete;
    Layer& operator=(const Layer&) = delete;

    const std::string& name() const noexcept { return name_; }

    /// Per-sample output shape (h, w, c) for a per-sample input shape.
    virtual Shape output_shape(const Shape& in) const = 0;
    virtual Tensor forward(const Tensor& x, Mode mode, std::mt19937_64& rng) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual void initialize(std::mt19937_64&) {}
    virtual void state(std::vector<StateBlock>&) {}
    /// Number of values in the layer's state, allocated or not.
    virtual std::size_t state_size() const { return 0; }

private:
    std::string name_;
};

class ConvLayer : public Layer {
public:
    ConvLayer(std::string name, std::size_t in_ch, std::size_t out_ch, std::size_t stride, bool transposed)
        : Layer(std::move(name)), in_(in_ch), out_(out_ch), stride_(stride), transposed_(transposed) {}

    Shape output_shape(const Shape& in) const override {
        if (in[2] != in_) throw ShapeError(name() + ": expected " + std::to_string(in_) + " input channels");
        if (transposed_) return {in[0] * stride_, in[1] * stride_, out_};
        return {(in[0] + stride_ - 1) / stride_, (in[1] + stride_ - 1) / stride_, out_};
    }

    void initialize(std::mt19937_64& rng) override {
        params_ = transposed_ ? nn::make_conv_params(out_, in_, stride_, rng)
                              : nn::make_conv_params(in_, out_, stride_, rng);
        if (transposed_) params_.bias.assign(out_, 0.0);
        grad_kernel_ = {};
        grad_bias_ = {};
    }

    Tensor forward(const Tensor& x, Mode, std::mt19937_64&) override {
        input_ = x;
        return transposed_ ? nn::conv2d_transpose_forward(x, params_) : nn::conv2d_forward(x, params_);
    }

    Tensor backward(const Tensor& grad_out) override {
        auto g = transposed_ ? nn::conv2d_transpose_backward(input_, params_, grad_out)
                             : nn::conv2d_backward(input_, params_, grad_out);
        grad_kernel_ = std::move(g.grad_kernel.values());
        grad_bias_ = std::move(g.grad_bias);
        return std::move(g.grad_x);
    }

    void state(std::vector<StateBlock>& out) override {
        ensure_grads();
        out.push_back({name() + ".kernel", params_.kernel.shape(), &params_.kernel.values(), &grad_kernel_});
        out.push_back({name() + ".bias", {params_.bias.size()}, &params_.bias, &grad_bias_});
    }

    std::size_t state_size() const override { return 9 * in_ * out_ + out_; }

    nn::ConvParams& params() noexcept { return params_; }
    bool transposed() const noexcept { return transposed_; }

private:
    void ensure_grads() {
        if (grad_kernel_.size() != params_.kernel.size()) grad_kernel_.assign(params_.kernel.size(), 0.0);
        if (grad_bias_.size() != params_.bias.size()) grad_bias_.assign(params_.bias.size(), 0.0);
    }

    std::size_t in_, out_, stride_;
    bool transposed_;
    nn::ConvParams params_;
    std::vector<double> grad_kernel_, grad_bias_;
    Tensor input_;
};

class BatchNormLayer : public Layer {
public:
    BatchNormLayer(std::string name, std::size_t channels) : Layer(std::move(name)), channels_(channels) {}

    Shape output_shape(const Shape& in) const override {
        if (in[2] != channels_) throw ShapeError(name() + ": channel mismatch");
        return in;
    }
    void initialize(std::mt19937_64&) override {
        params_ = nn::BatchNormParams(channels_);
        grad_gamma_.assign(channels_, 0.0);
        grad_beta_.assign(channels_, 0.0);
    }
    Tensor forward(const Tensor& x, Mode mode, std::mt19937_64&) override {
        return nn::batchnorm_forward(x, params_, mode, &cache_);
    }
    Tensor backward(const Tensor& grad_out) override {
        auto g = nn::batchnorm_backward(cache_, params_, grad_out);
        grad_gamma_ = std::move(g.grad_gamma);
        grad_beta_ = std::move(g.grad_beta);
        return std::move(g.grad_x);
    }
    void state(std::vector<StateBlock>& out) override {
        out.push_back({name() + ".gamma", {channels_}, &params_.gamma, &grad_gamma_});
        out.push_back({name() + ".beta", {channels_}, &params_.beta, &grad_beta_});
        out.push_back({name() + ".running_mean", {channels_}, &params_.running_mean, nullptr});
        out.push_back({name() + ".running_var", {channels_}, &params_.running_var, nullptr});
    }
    std::size_t state_size() const override { return 4 * channels_; }

    nn::BatchNormParams& params() noexcept { return params_; }

private:
    std::size_t channels_;
    nn::BatchNormParams params_;
    nn::BatchNormCache cache_;
    std::vector<double> grad_gamma_, grad_beta_;
};

class ActivationLayer : public Layer {
public:
    ActivationLayer(std::string name, nn::Activation kind) : Layer(std::move(name)), kind_(kind) {}

    Shape output_shape(const Shape& in) const override { return in; }
    Tensor forward(const Tensor& x, Mode, std::mt19937_64&) override {
        switch (kind_) {
        case nn::Activation::ReLU: input_ = x; return nn::relu(x);
        case nn::Activation::ELU: input_ = x; return nn::elu(x);
        case nn::Activation::Sigmoid: output_ = nn::sigmoid(x); return output_;
        }
        throw Error("unknown activation");
    }
    Tensor backward(const Tensor& grad_out) override {
        switch (kind_) {
        case nn::Activation::ReLU: return nn::relu_backward(input_, grad_out);
        case nn::Activation::ELU: return nn::elu_backward(input_, grad_out);
        case nn::Activation::Sigmoid: return nn::sigmoid_backward(output_, grad_out);
        }
        throw Error("unknown activation");
    }

private:
    nn::Activation kind_;
    Tensor input_, output_;
};

class DropoutLayer : public Layer {
public:
    DropoutLayer(std::string name, double rate) : Layer(std::move(name)), rate_(rate) {}

    Shape output_shape(const Shape& in) const override { return in; }
    Tensor forward(const Tensor& x, Mode mode, std::mt19937_64& rng) override {
        auto r = nn::dropout(x, rate_, mode, rng);
        mask_ = std::move(r.mask);
        return std::move(r.output);
    }
    Tensor backward(const Tensor& grad_out) override { return nn::dropout_backward(mask_, grad_out); }

    void set_rate(double rate) { rate_ = rate; }

private:
    double rate_;
    std::vector<double> mask_;
};

class CropLayer : public Layer {
public:
    CropLayer(std::string name, std::size_t size) : Layer(std::move(name)), size_(size) {}

    Shape output_shape(const Shape& in) const override {
        if (in[0] < size_ || in[1] < size_) throw ShapeError(name() + ": crop target larger than input");
        return {size_, size_, in[2]};
    }
    Tensor forward(const Tensor& x, Mode, std::mt19937_64&) override {
        input_shape_ = x.shape();
        return nn::crop_top_left(x, size_, size_);
    }
    Tensor backward(const Tensor& grad_out) override { return nn::crop_top_left_backward(grad_out, input_shape_); }

private:
    std::size_t size_;
    Shape input_shape_;
};

// ---------------------------------------------------------------------------
// Model

struct BlockShape {
    std::string name;
    std::size_t height = 0, width = 0, channels = 0;
    friend bool operator==(const BlockShape&, const BlockShape&) = default;
};

class Model {
public:
    /// Builds the layers, audits every block's output shape against the
    /// plan and draws the initial weights from `seed`.
    explicit Model(const ModelSpec& spec, std::uint64_t seed = 0) : Model(spec, seed, true) {}

    /// Shape audit without allocating any weights; throws ShapeError on the
    /// first block whose output differs from the plan.
    static std::vector<BlockShape> audit_shapes(const ModelSpec& spec) { return Model(spec, 0, false).block_shapes_; }

    const ModelSpec& spec() const noexcept { return spec_; }
    const std::vector<BlockPlan>& plan() const noexcept { return plan_; }
    const std::vector<BlockShape>& block_shapes() const noexcept { return block_shapes_; }
    std::uint64_t step_count() const noexcept { return steps_; }
    void set_step_count(std::uint64_t s) noexcept { steps_ = s; }

    /// Reseeds the dropout stream.
    void reseed(std::uint64_t seed) { rng_.seed(seed); }

    void set_dropout_rate(double rate) {
        if (!(rate >= 0.0 && rate < 1.0)) throw Error("dropout rate must lie in [0, 1)");
        for (auto& b : blocks_)
            for (auto& l : b.layers)
                if (auto* d = dynamic_cast<DropoutLayer*>(l.get())) d->set_rate(rate);
    }

    /// Sum of every conv, transposed-conv and batch-norm state value
    /// (kernels, biases, gamma, beta, running mean and variance).
    std::size_t state_value_count() const {
        std::size_t n = 0;
        for (const auto& b : blocks_)
            for (const auto& l : b.layers) n += l->state_size();
        return n;
    }

    /// Input is (N, size, size, 1) with values in [0, 1]; output (N, size, size, 3).
    Tensor forward(const Tensor& x, Mode mode) {
        nn::require_rank4(x, "model input");
        if (x.height() != spec_.input_size || x.width() != spec_.input_size || x.channels() != 1)
            throw ShapeError("model input must be " + std::to_string(spec_.input_size) + "x" +
                             std::to_string(spec_.input_size) + "x1, got " + nn::to_string(x.shape()));
        outputs_.assign(blocks_.size(), Tensor());
        Tensor h = x;
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            auto& block = blocks_[b];
            if (block.skip_from >= 0) {
                block.main_channels = h.channels();
                h = nn::concat_channels(h, outputs_[static_cast<std::size_t>(block.skip_from)]);
            }
            for (auto& layer : block.layers) h = layer->forward(h, mode, rng_);
            const auto& s = block_shapes_[b];
            if (h.height() != s.height || h.width() != s.width || h.channels() != s.channels)
                throw ShapeError(s.name + " produced " + nn::to_string(h.shape()));
            if (is_skip_source_[b]) outputs_[b] = h;
        }
        return h;
    }

    /// Backpropagates d(loss)/d(output) from the last forward pass, leaving
    /// parameter gradients in the layers. Returns d(loss)/d(input).
    Tensor backward(const Tensor& grad_out) {
        std::vector<Tensor> extra(blocks_.size());
        Tensor g = grad_out;
        for (std::size_t b = blocks_.size(); b-- > 0;) {
            auto& block = blocks_[b];
            if (!extra[b].empty())
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += extra[b][i];
            for (auto it = block.layers.rbegin(); it != block.layers.rend(); ++it) g = (*it)->backward(g);
            if (block.skip_from >= 0) {
                auto [main, skip] = nn::split_channels(g, block.main_channels);
                auto& target = extra[static_cast<std::size_t>(block.skip_from)];
                if (target.empty())
                    target = std::move(skip);
                else
                    for (std::size_t i = 0; i < target.size(); ++i) target[i] += skip[i];
                g = std::move(main);
            }
        }
        return g;
    }

    /// Every named state array in a fixed order.
    std::vector<StateBlock> state() {
        std::vector<StateBlock> out;
        for (auto& b : blocks_)
            for (auto& l : b.layers) l->state(out);
        return out;
    }

    std::vector<nn::ParamRef> trainable() {
        std::vector<nn::ParamRef> refs;
        for (auto& s : state())
            if (s.grad) refs.push_back({*s.value, *s.grad});
        return refs;
    }

    /// Direct access for tests and diagnostics.
    Layer& layer(std::string_view name) {
        for (auto& b : blocks_)
            for (auto& l : b.layers)
                if (l->name() == name) return *l;
        throw Error("no layer named '" + std::string(name) + "'");
    }

private:
    struct Block {
        std::vector<std::unique_ptr<Layer>> layers;
        int skip_from = -1;
        std::size_t main_channels = 0;
    };

    Model(const ModelSpec& spec, std::uint64_t seed, bool allocate)
        : spec_(spec), plan_(plan_model(spec)), rng_(seed) {
        for (const auto& p : plan_) blocks_.push_back(make_block(p));
        is_skip_source_.assign(blocks_.size(), false);
        for (const auto& p : plan_)
            if (p.skip_from >= 0) is_skip_source_[static_cast<std::size_t>(p.skip_from)] = true;
        audit();
        if (allocate) {
            std::mt19937_64 init(seed);
            for (auto& b : blocks_)
                for (auto& l : b.layers) l->initialize(init);
        }
    }

    Block make_block(const BlockPlan& p) const {
        Block b;
        b.skip_from = p.skip_from;
        auto add = [&](std::unique_ptr<Layer> l) { b.layers.push_back(std::move(l)); };
        const std::string& n = p.name;
        switch (p.kind) {
        case BlockKind::InputConv:
            add(std::make_unique<ConvLayer>(n + ".conv", p.in_channels, p.depth, 1, false));
            add(std::make_unique<ActivationLayer>(n + ".elu", nn::Activation::ELU));
            break;
        case BlockKind::Half:
        case BlockKind::Same:
            add(std::make_unique<ConvLayer>(n + ".conv", p.in_channels, p.depth, p.kind == BlockKind::Half ? 2 : 1,
                                            false));
            add(std::make_unique<BatchNormLayer>(n + ".bn", p.depth));
            add(std::make_unique<ActivationLayer>(n + ".relu", nn::Activation::ReLU));
            break;
        case BlockKind::Double:
            add(std::make_unique<ConvLayer>(n + ".deconv", p.in_channels, p.depth, 2, true));
            add(std::make_unique<CropLayer>(n + ".crop", p.out_size));
            add(std::make_unique<ActivationLayer>(n + ".elu", nn::Activation::ELU));
            add(std::make_unique<BatchNormLayer>(n + ".bn", p.depth));
            add(std::make_unique<DropoutLayer>(n + ".dropout", default_dropout_rate));
            break;
        case BlockKind::OutputConv:
            add(std::make_unique<ConvLayer>(n + ".conv", p.in_channels, p.depth, 1, false));
            add(std::make_unique<ActivationLayer>(n + ".sigmoid", nn::Activation::Sigmoid));
            break;
        }
        return b;
    }

    void audit() {
        Shape s{spec_.input_size, spec_.input_size, 1};
        std::vector<Shape> outs;
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            const auto& p = plan_[i];
            if (p.skip_from >= 0) s[2] += outs[static_cast<std::size_t>(p.skip_from)][2];
            for (const auto& l : blocks_[i].layers) s = l->output_shape(s);
            if (s != Shape{p.out_size, p.out_size, p.depth})
                throw ShapeError("shape audit: " + p.name + " produces " + nn::to_string(s) + ", expected " +
                                 nn::to_string({p.out_size, p.out_size, p.depth}));
            outs.push_back(s);
            block_shapes_.push_back({p.name, s[0], s[1], s[2]});
        }
    }

    ModelSpec spec_;
    std::vector<BlockPlan> plan_;
    std::vector<Block> blocks_;
    std::vector<bool> is_skip_source_;
    std::vector<BlockShape> block_shapes_;
    std::vector<Tensor> outputs_;
    std::mt19937_64 rng_;
    std::uint64_t steps_ = 0;
};

// ---------------------------------------------------------------------------
// Data conversion

/// Resizes to the model resolution and scales into [0, 1].
inline Tensor thermal_to_tensor(const GrayImage& thermal, std::size_t size) {
    const GrayImage g = resize_bilinear(thermal, size, size);
    Tensor t({1, size, size, 1});
    for (std::size_t i = 0; i < g.pixel_count(); ++i) t[i] = g.data()[i] / 255.0;
    return t;
}

inline Tensor rgb_to_tensor(const RgbImage& rgb, std::size_t size) {
    const RgbImage r = resize_bilinear(rgb, size, size);
    Tensor t({1, size, size, 3});
    for (std::size_t i = 0; i < r.data().size(); ++i) t[i] = r.data()[i] / 255.0;
    return t;
}

/// Sample `n` of an (N, H, W, 3) tensor in [0, 1] as an 8-bit image.
inline RgbImage tensor_to_rgb(const Tensor& t, std::size_t n = 0) {
    RgbImage out(t.width(), t.height());
    const std::size_t len = t.height() * t.width() * 3;
    for (std::size_t i = 0; i < len; ++i) out.data()[i] = clamp_to_byte(255.0 * t[n * len + i]);
    return out;
}

/// Inference-mode forward pass on a thermal image of any size.
inline RgbImage predict_mask(Model& model, const GrayImage& thermal) {
    const Tensor y = model.forward(thermal_to_tensor(thermal, model.spec().input_size), Mode::Infer);
    y.require_finite("mask prediction");
    return tensor_to_rgb(y);
}

// ---------------------------------------------------------------------------
// Training

struct TrainingConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 8;
    nn::AdamaxHyper optimizer;
    double dropout_rate = default_dropout_rate;
    std::uint64_t seed = 0;
};

struct TrainingPair {
    GrayImage thermal;
    RgbImage optical;
};

struct EpochStats {
    std::size_t epoch = 0;
    double mean_loss = 0.0;
    double wall_seconds = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> trace;
};

/// Minibatch Adamax on the mean logcosh between predicted masks and the
/// optical targets scaled into [0, 1]. The sample order is reshuffled every
/// epoch from the run seed.
inline TrainResult train(Model& model, const TrainingConfig& config, const std::vector<TrainingPair>& dataset,
                         const std::function<void(const EpochStats&)>& on_epoch = {}) {
    if (dataset.empty()) throw Error("training dataset is empty");
    if (config.epochs < 1 || config.batch_size < 1) throw Error("epochs and batch size must be >= 1");
    const std::size_t size = model.spec().input_size;
    std::vector<Tensor> inputs, targets;
    for (const auto& p : dataset) {
        inputs.push_back(thermal_to_tensor(p.thermal, size));
        targets.push_back(rgb_to_tensor(p.optical, size));
    }
    const std::size_t in_len = size * size, out_len = size * size * 3;

    model.reseed(config.seed);
    model.set_dropout_rate(config.dropout_rate);
    std::mt19937_64 shuffle_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
    nn::AdamaxState optimizer(config.optimizer);
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        for (std::size_t first = 0; first < order.size(); first += config.batch_size) {
            const std::size_t count = std::min(config.batch_size, order.size() - first);
            Tensor x({count, size, size, 1}), y({count, size, size, 3});
            for (std::size_t i = 0; i < count; ++i) {
                std::copy_n(inputs[order[first + i]].data().begin(), in_len,
                            x.data().begin() + static_cast<std::ptrdiff_t>(i * in_len));
                std::copy_n(targets[order[first + i]].data().begin(), out_len,
                            y.data().begin() + static_cast<std::ptrdiff_t>(i * out_len));
            }
            const Tensor pred = model.forward(x, Mode::Train);
            auto loss = nn::logcosh_loss(pred, y);
            if (!std::isfinite(loss.loss))
                throw NumericalError("loss became non-finite in epoch " + std::to_string(epoch));
            model.backward(loss.grad);
            const auto params = model.trainable();
            optimizer.step(params);
            model.set_step_count(model.step_count() + 1);
            loss_sum += loss.loss * static_cast<double>(count);
        }
        EpochStats stats{epoch, loss_sum / static_cast<double>(order.size()),
                         std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
        result.trace.push_back(stats);
        if (on_epoch) on_epoch(stats);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Checkpoints
//
// Little-endian binary container:
//   "TCOLCKPT"  u32 version  u32 variant  u64 input_size  u64 width_divisor
//   u64 step_count  u64 block_count
//   per block: u32 name_len, name, u32 rank, u64 dims[rank], u64 count, f64 values[count]

struct NamedArray {
    std::string name;
    Shape shape;
    std::vector<double> values;
    friend bool operator==(const NamedArray&, const NamedArray&) = default;
};

struct Checkpoint {
    static constexpr std::uint32_t format_version = 1;
    ModelSpec spec;
    std::uint64_t step_count = 0;
    std::vector<NamedArray> blocks;
    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline constexpr std::string_view checkpoint_magic = "TCOLCKPT";

namespace detail {

class ByteWriter {
public:
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
    void bytes(std::string_view s) { out_.append(s); }
    std::string& str() { return out_; }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    std::string out_;
};

class ByteReader {
public:
    explicit ByteReader(const std::vector<unsigned char>& b) : b_(b) {}
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    double f64() { return std::bit_cast<double>(get(8)); }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    bool at_end() const { return pos_ == b_.size(); }
    std::size_t remaining() const { return b_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (b_.size() - pos_ < n) throw FormatError("checkpoint is truncated");
    }
    std::uint64_t get(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    const std::vector<unsigned char>& b_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline Checkpoint make_checkpoint(Model& model) {
    Checkpoint c;
    c.spec = model.spec();
    c.step_count = model.step_count();
    for (const auto& s : model.state()) c.blocks.push_back({s.name, s.shape, *s.value});
    return c;
}

/// Copies checkpoint values into the model after validating the variant and
/// every block name and shape.
inline void restore_checkpoint(Model& model, const Checkpoint& c) {
    if (!(c.spec == model.spec()))
        throw ShapeError("checkpoint was written for variant '" + std::string(to_string(c.spec.variant)) + "' at " +
                         std::to_string(c.spec.input_size) + "px/div " + std::to_string(c.spec.width_divisor) +
                         ", model is '" + std::string(to_string(model.spec().variant)) + "' at " +
                         std::to_string(model.spec().input_size) + "px/div " +
                         std::to_string(model.spec().width_divisor));
    auto state = model.state();
    if (state.size() != c.blocks.size()) throw ShapeError("checkpoint block count does not match the model");
    for (std::size_t i = 0; i < state.size(); ++i) {
        const auto& b = c.blocks[i];
        if (b.name != state[i].name || b.shape != state[i].shape || b.values.size() != state[i].value->size())
            throw ShapeError("checkpoint block '" + b.name + "' " + nn::to_string(b.shape) +
                             " does not match model block '" + state[i].name + "' " + nn::to_string(state[i].shape));
    }
    for (std::size_t i = 0; i < state.size(); ++i) *state[i].value = c.blocks[i].values;
    model.set_step_count(c.step_count);
}

inline std::string encode_checkpoint(const Checkpoint& c) {
    detail::ByteWriter w;
    w.bytes(checkpoint_magic);
    w.u32(Checkpoint::format_version);
    w.u32(static_cast<std::uint32_t>(c.spec.variant));
    w.u64(c.spec.input_size);
    w.u64(c.spec.width_divisor);
    w.u64(c.step_count);
    w.u64(c.blocks.size());
    for (const auto& b : c.blocks) {
        w.u32(static_cast<std::uint32_t>(b.name.size()));
        w.bytes(b.name);
        w.u32(static_cast<std::uint32_t>(b.shape.size()));
        for (auto d : b.shape) w.u64(d);
        w.u64(b.values.size());
        for (double v : b.values) w.f64(v);
    }
    return std::move(w.str());
}

inline Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes) {
    detail::ByteReader r(bytes);
    if (r.bytes(checkpoint_magic.size()) != checkpoint_magic) throw FormatError("not a checkpoint file");
    const auto version = r.u32();
    if (version != Checkpoint::format_version)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    Checkpoint c;
    const auto variant = r.u32();
    if (variant > static_cast<std::uint32_t>(Variant::DownTo1x1)) throw FormatError("unknown variant tag");
    c.spec.variant = static_cast<Variant>(variant);
    c.spec.input_size = r.u64();
    c.spec.width_divisor = r.u64();
    c.step_count = r.u64();
    const auto count = r.u64();
    for (std::uint64_t i = 0; i < count; ++i) {
        NamedArray b;
        b.name = r.bytes(r.u32());
        const auto rank = r.u32();
        if (rank > 8) throw FormatError("checkpoint block '" + b.name + "' has an implausible rank");
        for (std::uint32_t k = 0; k < rank; ++k) b.shape.push_back(r.u64());
        const auto n = r.u64();
        if (n != nn::shape_size(b.shape)) throw FormatError("checkpoint block '" + b.name + "' length mismatch");
        if (n > r.remaining() / 8) throw FormatError("checkpoint is truncated");
        b.values.resize(n);
        for (auto& v : b.values) v = r.f64();
        c.blocks.push_back(std::move(b));
    }
    if (!r.at_end()) throw FormatError("trailing bytes after checkpoint payload");
    return c;
}

inline void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
    fileio::write_atomic(path, encode_checkpoint(c));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(fileio::read_bytes(path));
}

/// Loads and validates against an expected spec.
inline Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelSpec& expected) {
    auto c = load_checkpoint(path);
    Model probe(expected, 0);
    restore_checkpoint(probe, c);
    return c;
}

/// Builds a model from a checkpoint file.
inline Model load_model(const std::filesystem::path& path) {
    const auto c = load_checkpoint(path);
    Model m(c.spec, 0);
    restore_checkpoint(m, c);
    return m;
}

} // namespace thermocolor
