#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "support.hpp"
#include "thermocolor/colorizer.hpp"
#include "thermocolor/synthetic.hpp"

using namespace thermocolor;
using testing_support::TempDir;

namespace {

struct ConvSpec {
    std::size_t in, out;
    bool batchnorm;
};

/// Value count from the layer tables alone: 9*in*out + out per conv, and
/// gamma, beta, running mean, running variance per batch-norm channel.
std::size_t count_values(const std::vector<ConvSpec>& convs) {
    std::size_t n = 0;
    for (const auto& c : convs) n += 9 * c.in * c.out + c.out + (c.batchnorm ? 4 * c.out : 0);
    return n;
}

const std::vector<ConvSpec> proposed_table{
    {1, 1, false},      {1, 128, true},     {128, 128, true},   {128, 256, true},  {256, 256, true},
    {256, 512, true},   {512, 512, true},   {512, 1024, true},  {1024, 2048, true}, {2048, 2048, true},
    {2048, 1024, true}, {1024, 512, true},  {512, 256, true},   {256, 256, true},  {256, 128, true},
    {128, 128, true},   {128, 64, true},    {64, 3, false}};

std::vector<TrainingPair> tiny_dataset(std::size_t n, std::size_t size, std::uint64_t seed) {
    std::vector<TrainingPair> data;
    for (std::size_t i = 0; i < n; ++i) {
        const auto g = synthetic::smooth_field(size, size, seed + i, 256, 8, size / 4.0, size * 2.0);
        auto t = g;
        for (auto& v : t.data()) v = static_cast<std::uint8_t>(255 - v);
        data.push_back({t, synthetic::colorize(g)});
    }
    return data;
}

Tensor random_input(std::size_t n, std::size_t size, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return gradcheck::random_tensor({n, size, size, 1}, rng, 0, 1);
}

} // namespace

TEST(Plan, ProposedShapesMatchTables) {
    const auto shapes = Model::audit_shapes({Variant::Proposed, 200, 1});
    const std::vector<BlockShape> expected{
        {"block01", 200, 200, 1},   {"block02", 100, 100, 128}, {"block03", 100, 100, 128},
        {"block04", 50, 50, 256},   {"block05", 50, 50, 256},   {"block06", 25, 25, 512},
        {"block07", 25, 25, 512},   {"block08", 25, 25, 1024},  {"block09", 25, 25, 2048},
        {"block10", 25, 25, 2048},  {"block11", 25, 25, 1024},  {"block12", 25, 25, 512},
        {"block13", 50, 50, 256},   {"block14", 50, 50, 256},   {"block15", 100, 100, 128},
        {"block16", 100, 100, 128}, {"block17", 200, 200, 64},  {"block18", 200, 200, 3}};
    EXPECT_EQ(shapes, expected);
}

TEST(Plan, TwoIntermediateKeepsTwoBlocks) {
    const auto plan = plan_model({Variant::TwoIntermediate, 200, 1});
    EXPECT_EQ(plan.size(), 15u);
    EXPECT_EQ(plan[7].depth, 1024u);
    EXPECT_EQ(plan[8].depth, 512u);
    EXPECT_EQ(plan[9].name, "block13");
}

TEST(Plan, SkipConnectionsConcatenateMatchingEncoderStages) {
    const auto plan = plan_model({Variant::SkipConnections, 200, 1});
    const auto find = [&](const std::string& name) {
        return *std::find_if(plan.begin(), plan.end(), [&](const BlockPlan& b) { return b.name == name; });
    };
    EXPECT_EQ(plan[static_cast<std::size_t>(find("block13").skip_from)].name, "block07");
    EXPECT_EQ(plan[static_cast<std::size_t>(find("block14").skip_from)].name, "block05");
    EXPECT_EQ(plan[static_cast<std::size_t>(find("block16").skip_from)].name, "block03");
    EXPECT_EQ(find("block13").in_channels, 512u + 512u);
    EXPECT_EQ(find("block14").in_channels, 256u + 256u);
    EXPECT_EQ(find("block15").skip_from, -1);
    EXPECT_EQ(find("block16").in_channels, 128u + 128u);
    EXPECT_EQ(Model::audit_shapes({Variant::SkipConnections, 200, 1}).back(), (BlockShape{"block18", 200, 200, 3}));
    EXPECT_EQ(Model::audit_shapes({Variant::TwoIntermediateSkip, 200, 1}).size(), 15u);
}

TEST(Plan, DownToOneDescendsAndCropsBackUp) {
    const auto shapes = Model::audit_shapes({Variant::DownTo1x1, 200, 1});
    std::vector<std::size_t> sizes;
    for (const auto& s : shapes) sizes.push_back(s.height);
    const std::vector<std::size_t> expected{200, 100, 100, 50, 50, 25, 25, 13, 7, 4, 2, 1, 1, 1, 1, 1, 1,
                                            2,   4,   7,   13, 25, 50, 50, 100, 100, 200, 200};
    EXPECT_EQ(sizes, expected);
    for (const auto& p : plan_model({Variant::DownTo1x1, 200, 1})) EXPECT_EQ(p.skip_from, -1);
}

TEST(Plan, WidthDivisorShrinksDepthsButNotEnds) {
    const auto plan = plan_model({Variant::Proposed, 64, 8});
    EXPECT_EQ(plan.front().depth, 1u);
    EXPECT_EQ(plan[1].depth, 16u);
    EXPECT_EQ(plan[8].depth, 256u);
    EXPECT_EQ(plan.back().depth, 3u);
    EXPECT_EQ(plan_model({Variant::Proposed, 16, 4096})[1].depth, 1u);
}

TEST(Model, ValueCountMatchesLayerTables) {
    const std::size_t expected = count_values(proposed_table);
    EXPECT_EQ(Model(ModelSpec{Variant::Proposed, 16, 1}, 0).state_value_count(), expected);
    // Input size does not change the count.
    EXPECT_EQ(Model(ModelSpec{Variant::Proposed, 8, 1}, 0).state_value_count(), expected);
}

TEST(Model, SkipVariantValueCountIncludesWiderDecoderInputs) {
    auto table = proposed_table;
    table[12].in += 512;  // block13
    table[13].in += 256;  // block14
    table[15].in += 128;  // block16
    EXPECT_EQ(Model(ModelSpec{Variant::SkipConnections, 8, 1}, 0).state_value_count(), count_values(table));
}

TEST(Model, RejectsWrongInputShape) {
    Model m({Variant::Proposed, 16, 16}, 0);
    EXPECT_THROW(m.forward(Tensor({1, 15, 15, 1}), Mode::Infer), ShapeError);
    EXPECT_THROW(m.forward(Tensor({1, 16, 16, 3}), Mode::Infer), ShapeError);
}

TEST(Model, OutputIsOpenUnitInterval) {
    for (auto v : {Variant::Proposed, Variant::TwoIntermediate, Variant::SkipConnections, Variant::TwoIntermediateSkip,
                   Variant::DownTo1x1}) {
        Model m({v, 16, 16}, 1);
        const Tensor y = m.forward(random_input(2, 16, 3), Mode::Infer);
        EXPECT_EQ(y.shape(), (Shape{2, 16, 16, 3})) << to_string(v);
        for (double value : y.data()) {
            EXPECT_GT(value, 0.0);
            EXPECT_LT(value, 1.0);
        }
    }
}

TEST(Model, EndToEndGradientMatchesFiniteDifferences) {
    for (auto v : {Variant::Proposed, Variant::SkipConnections, Variant::DownTo1x1}) {
        Model m({v, 16, 16}, 2);
        const Tensor x = random_input(2, 16, 4);
        std::mt19937_64 rng(5);
        const Tensor target = gradcheck::random_tensor({2, 16, 16, 3}, rng, 0, 1);
        const auto loss = [&] {
            m.reseed(9);
            return nn::logcosh_loss(m.forward(x, Mode::Train), target);
        };
        m.backward(loss().grad);
        auto state = m.state();
        ASSERT_EQ(state.front().name, "block01.conv.kernel");
        const std::vector<double> analytic = *state.front().grad;
        const double err = gradcheck::relative_error(*state.front().value, analytic, [&] { return loss().loss; }, 1e-5);
        EXPECT_LT(err, 1e-3) << to_string(v);
    }
}

TEST(Model, ZeroedSkipContributionsReduceToPlainModel) {
    const std::size_t size = 16, div = 16;
    Model skip({Variant::SkipConnections, size, div}, 3);
    Model plain({Variant::Proposed, size, div}, 4);
    auto s_state = skip.state();
    auto p_state = plain.state();
    ASSERT_EQ(s_state.size(), p_state.size());
    for (std::size_t i = 0; i < s_state.size(); ++i) {
        auto& sv = *s_state[i].value;
        auto& pv = *p_state[i].value;
        if (sv.size() == pv.size()) {
            pv = sv;
            continue;
        }
        // Decoder kernel with extra skip inputs: keep the main-input slice in
        // the plain model and zero the skip slice in the skip model.
        const auto& ss = s_state[i].shape;
        const auto& ps = p_state[i].shape;
        const bool transposed = s_state[i].name.find("deconv") != std::string::npos;
        const std::size_t s_in = transposed ? ss[3] : ss[2], p_in = transposed ? ps[3] : ps[2];
        const std::size_t out = transposed ? ss[2] : ss[3];
        for (std::size_t tap = 0; tap < 9; ++tap)
            for (std::size_t a = 0; a < (transposed ? out : s_in); ++a)
                for (std::size_t b = 0; b < (transposed ? s_in : out); ++b) {
                    const std::size_t in_index = transposed ? b : a;
                    const std::size_t s_idx = (tap * (transposed ? out : s_in) + a) * (transposed ? s_in : out) + b;
                    if (in_index >= p_in) {
                        sv[s_idx] = 0.0;
                    } else {
                        const std::size_t p_idx =
                            (tap * (transposed ? out : p_in) + a) * (transposed ? p_in : out) + b;
                        pv[p_idx] = sv[s_idx];
                    }
                }
    }
    const Tensor x = random_input(2, size, 6);
    const Tensor ys = skip.forward(x, Mode::Infer), yp = plain.forward(x, Mode::Infer);
    for (std::size_t i = 0; i < ys.size(); ++i) EXPECT_NEAR(ys[i], yp[i], 1e-12);
}

TEST(Predict, ZeroFinalLayerGivesMidGray) {
    Model m({Variant::Proposed, 16, 16}, 11);
    auto& out = dynamic_cast<ConvLayer&>(m.layer("block18.conv"));
    out.params().kernel.fill(0.0);
    std::fill(out.params().bias.begin(), out.params().bias.end(), 0.0);
    const auto mask = predict_mask(m, synthetic::smooth_field(40, 30, 1));
    EXPECT_EQ(mask.width(), 16u);
    EXPECT_EQ(mask.height(), 16u);
    for (auto v : mask.data()) EXPECT_EQ(v, 128);
}

TEST(Predict, DeterministicAndAnyInputSize) {
    Model m({Variant::Proposed, 16, 16}, 12);
    const auto thermal = synthetic::smooth_field(37, 23, 2);
    const auto a = predict_mask(m, thermal);
    EXPECT_EQ(a, predict_mask(m, thermal));
    EXPECT_EQ(a.width(), 16u);
    EXPECT_EQ(predict_mask(m, GrayImage(300, 200, 50)).height(), 16u);
}

TEST(Train, ZeroLearningRateKeepsLossConstant) {
    Model m({Variant::Proposed, 16, 16}, 13);
    TrainingConfig c;
    c.epochs = 4;
    c.batch_size = 4;
    c.optimizer.lr = 0.0;
    c.dropout_rate = 0.0;
    const auto before = make_checkpoint(m);
    const auto r = train(m, c, tiny_dataset(4, 16, 1));
    ASSERT_EQ(r.trace.size(), 4u);
    for (const auto& e : r.trace) EXPECT_NEAR(e.mean_loss, r.trace.front().mean_loss, 1e-12);
    const auto after = make_checkpoint(m);
    for (std::size_t i = 0; i < before.blocks.size(); ++i)
        if (before.blocks[i].name.find("running") == std::string::npos)
            EXPECT_EQ(before.blocks[i].values, after.blocks[i].values) << before.blocks[i].name;
}

TEST(Train, ConstantTargetLossFallsOverFirstEpochs) {
    Model m({Variant::Proposed, 32, 16}, 14);
    auto data = tiny_dataset(4, 32, 2);
    for (auto& p : data) p.optical = RgbImage(32, 32, 128);
    TrainingConfig c;
    c.epochs = 5;
    c.batch_size = 4;
    c.dropout_rate = 0.0;
    c.seed = 14;
    const auto r = train(m, c, data);
    for (std::size_t i = 1; i < r.trace.size(); ++i)
        EXPECT_LT(r.trace[i].mean_loss, r.trace[i - 1].mean_loss) << "epoch " << i + 1;
}

TEST(Train, SameSeedSameTraceAndWeights) {
    const auto data = tiny_dataset(3, 16, 3);
    TrainingConfig c;
    c.epochs = 3;
    c.batch_size = 2;
    c.seed = 21;
    Model a({Variant::SkipConnections, 16, 16}, 21), b({Variant::SkipConnections, 16, 16}, 21);
    const auto ra = train(a, c, data), rb = train(b, c, data);
    for (std::size_t i = 0; i < ra.trace.size(); ++i) EXPECT_EQ(ra.trace[i].mean_loss, rb.trace[i].mean_loss);
    EXPECT_EQ(encode_checkpoint(make_checkpoint(a)), encode_checkpoint(make_checkpoint(b)));
    EXPECT_EQ(a.step_count(), 6u);
}

TEST(Train, RejectsEmptyDataAndAbortsOnNan) {
    Model m({Variant::Proposed, 16, 16}, 15);
    EXPECT_THROW(train(m, TrainingConfig{}, {}), Error);
    auto& conv = dynamic_cast<ConvLayer&>(m.layer("block18.conv"));
    conv.params().bias[0] = std::nan("");
    TrainingConfig c;
    c.epochs = 1;
    EXPECT_THROW(train(m, c, tiny_dataset(2, 16, 4)), NumericalError);
}

TEST(Checkpoint, SaveLoadIsCanonicalAndPreservesPredictions) {
    TempDir dir;
    Model m({Variant::DownTo1x1, 16, 16}, 16);
    TrainingConfig c;
    c.epochs = 1;
    c.batch_size = 2;
    train(m, c, tiny_dataset(2, 16, 5));
    const auto ckpt = make_checkpoint(m);
    save_checkpoint(ckpt, dir / "m.ckpt");
    const auto loaded = load_checkpoint(dir / "m.ckpt");
    EXPECT_EQ(loaded, ckpt);
    EXPECT_EQ(encode_checkpoint(loaded), encode_checkpoint(ckpt));
    EXPECT_EQ(loaded.spec.variant, Variant::DownTo1x1);
    EXPECT_EQ(loaded.step_count, 1u);

    Model restored = load_model(dir / "m.ckpt");
    const auto thermal = synthetic::smooth_field(30, 30, 6);
    EXPECT_EQ(predict_mask(m, thermal), predict_mask(restored, thermal));
}

TEST(Checkpoint, VariantMismatchIsAShapeError) {
    TempDir dir;
    Model a({Variant::Proposed, 16, 16}, 0);
    save_checkpoint(make_checkpoint(a), dir / "a.ckpt");
    EXPECT_THROW(load_checkpoint(dir / "a.ckpt", ModelSpec{Variant::SkipConnections, 16, 16}), ShapeError);
    EXPECT_NO_THROW(load_checkpoint(dir / "a.ckpt", ModelSpec{Variant::Proposed, 16, 16}));
    Model b({Variant::SkipConnections, 16, 16}, 0);
    EXPECT_THROW(restore_checkpoint(b, make_checkpoint(a)), ShapeError);
}

TEST(Checkpoint, CorruptionIsDetected) {
    Model m({Variant::Proposed, 8, 64}, 0);
    const std::string bytes = encode_checkpoint(make_checkpoint(m));
    const auto decode = [](std::string s) {
        return decode_checkpoint(std::vector<unsigned char>(s.begin(), s.end()));
    };
    EXPECT_NO_THROW(decode(bytes));
    EXPECT_THROW(decode(bytes.substr(0, bytes.size() - 3)), FormatError);
    EXPECT_THROW(decode(bytes + "x"), FormatError);
    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    EXPECT_THROW(decode(bad_magic), FormatError);
    std::string bad_version = bytes;
    bad_version[8] = 9;
    EXPECT_THROW(decode(bad_version), FormatError);
    EXPECT_THROW(load_checkpoint("/nonexistent/model.ckpt"), IoError);
}

TEST(Variant, NamesRoundTrip) {
    for (auto v : {Variant::Proposed, Variant::TwoIntermediate, Variant::SkipConnections, Variant::TwoIntermediateSkip,
                   Variant::DownTo1x1})
        EXPECT_EQ(parse_variant(to_string(v)), v);
    EXPECT_THROW(parse_variant("unet"), Error);
}
