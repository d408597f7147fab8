#pragma once

// Translation registration of a thermal image inside a (rescaled) optical
// image by maximizing histogram mutual information.
//
// Offsets follow the (row, column) convention: offset_x indexes rows and is
// bounded by optical_height - thermal_height, offset_y indexes columns.

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "thermocolor/errors.hpp"
#include "thermocolor/image.hpp"
#include "thermocolor/parallel.hpp"

namespace thermocolor {

struct Histogram256 {
    std::array<std::uint64_t, 256> counts{};
    std::uint64_t total = 0;
};

struct JointHistogram {
    std::vector<std::uint64_t> counts = std::vector<std::uint64_t>(256 * 256, 0);
    std::uint64_t total = 0;

    std::uint64_t at(std::uint8_t a, std::uint8_t b) const { return counts[(std::size_t{a} << 8) | b]; }
};

inline Histogram256 histogram(const GrayImage& img) {
    Histogram256 h;
    for (auto v : img.data()) ++h.counts[v];
    h.total = img.pixel_count();
    return h;
}

inline JointHistogram joint_histogram(const GrayImage& a, const GrayImage& b) {
    if (a.width() != b.width() || a.height() != b.height())
        throw ShapeError("joint histogram needs images of identical dimensions");
    JointHistogram h;
    for (std::size_t i = 0; i < a.pixel_count(); ++i) ++h.counts[(std::size_t{a.data()[i]} << 8) | b.data()[i]];
    h.total = a.pixel_count();
    return h;
}

namespace detail {

/// c * ln(c), with 0 ln 0 = 0. Every entropy in this file is assembled from
/// these terms in increasing bin order, so identical histograms give
/// bitwise-identical entropies.
inline double c_log_c(std::uint64_t c) {
    return c == 0 ? 0.0 : static_cast<double>(c) * std::log(static_cast<double>(c));
}

/// H = ln N - (1/N) sum c ln c.
inline double entropy_from_sum(double sum_c_log_c, std::uint64_t total) {
    const double n = static_cast<double>(total);
    return std::log(n) - sum_c_log_c / n;
}

} // namespace detail

/// Shannon entropy in nats.
inline double entropy(const Histogram256& h) {
    if (h.total == 0) throw ShapeError("entropy of an empty histogram");
    double s = 0.0;
    for (auto c : h.counts)
        if (c) s += detail::c_log_c(c);
    return detail::entropy_from_sum(s, h.total);
}

inline double entropy(const JointHistogram& h) {
    if (h.total == 0) throw ShapeError("entropy of an empty histogram");
    double s = 0.0;
    for (auto c : h.counts)
        if (c) s += detail::c_log_c(c);
    return detail::entropy_from_sum(s, h.total);
}

/// Scores candidate windows of an optical image against a fixed reference
/// patch. Scratch buffers are per-instance; use one evaluator per worker.
class MiEvaluator {
public:
    /// `reference` is the patch compared at every candidate offset.
    explicit MiEvaluator(const GrayImage& reference)
        : rows_(reference.height()), cols_(reference.width()), reference_(reference.buffer()),
          joint_(256 * 256, 0) {
        const std::size_t n = rows_ * cols_;
        c_log_c_.resize(n + 1);
        for (std::size_t c = 0; c <= n; ++c) c_log_c_[c] = detail::c_log_c(c);
        reference_entropy_ = entropy(histogram(reference));
    }

    double reference_entropy() const noexcept { return reference_entropy_; }
    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    /// MI between the reference and the window of `optical` whose top-left
    /// corner is (row, col). Clamped at 0.
    double score(const GrayImage& optical, std::size_t row, std::size_t col) {
        const std::size_t stride = optical.width();
        const std::uint8_t* base = optical.data().data() + row * stride + col;
        const std::uint8_t* ref = reference_.data();
        std::array<std::uint32_t, 256> marginal{};
        for (std::size_t r = 0; r < rows_; ++r) {
            const std::uint8_t* o = base + r * stride;
            const std::uint8_t* t = ref + r * cols_;
            for (std::size_t c = 0; c < cols_; ++c) {
                const std::size_t idx = (std::size_t{t[c]} << 8) | o[c];
                ++joint_[idx];
                touched_[idx >> 6] |= std::uint64_t{1} << (idx & 63);
                ++marginal[o[c]];
            }
        }
        const std::uint64_t n = rows_ * cols_;

        double s_window = 0.0;
        for (auto c : marginal)
            if (c) s_window += c_log_c_[c];

        double s_joint = 0.0;
        for (std::size_t w = 0; w < touched_.size(); ++w) {
            std::uint64_t bits = touched_[w];
            if (!bits) continue;
            touched_[w] = 0;
            while (bits) {
                const std::size_t idx = (w << 6) | static_cast<std::size_t>(std::countr_zero(bits));
                s_joint += c_log_c_[joint_[idx]];
                joint_[idx] = 0;
                bits &= bits - 1;
            }
        }
        const double mi = reference_entropy_ + (detail::entropy_from_sum(s_window, n) -
                                                detail::entropy_from_sum(s_joint, n));
        return mi > 0.0 ? mi : 0.0;
    }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<std::uint8_t> reference_;
    std::vector<double> c_log_c_;
    std::vector<std::uint32_t> joint_;
    std::array<std::uint64_t, 1024> touched_{};
    double reference_entropy_ = 0.0;
};

/// MI = H(A) + H(B) - H(A, B) in nats, clamped at 0.
inline double mutual_information(const GrayImage& a, const GrayImage& b) {
    if (a.width() != b.width() || a.height() != b.height())
        throw ShapeError("mutual information needs images of identical dimensions");
    MiEvaluator eval(a);
    return eval.score(b, 0, 0);
}

// ---------------------------------------------------------------------------
// Search

enum class Algorithm { Exhaustive, Reduced, Trimmed };

inline std::string_view to_string(Algorithm a) {
    switch (a) {
    case Algorithm::Exhaustive: return "exhaustive";
    case Algorithm::Reduced: return "reduced";
    case Algorithm::Trimmed: return "trimmed";
    }
    return "unknown";
}

inline Algorithm parse_algorithm(std::string_view s) {
    if (s == "exhaustive") return Algorithm::Exhaustive;
    if (s == "reduced") return Algorithm::Reduced;
    if (s == "trimmed") return Algorithm::Trimmed;
    throw Error("unknown registration algorithm '" + std::string(s) + "'");
}

/// Half-open offset window [x_lo, x_hi) x [y_lo, y_hi).
struct SearchRange {
    std::size_t x_lo = 0, x_hi = 0;
    std::size_t y_lo = 0, y_hi = 0;

    std::size_t rows() const noexcept { return x_hi - x_lo; }
    std::size_t cols() const noexcept { return y_hi - y_lo; }
    std::size_t size() const noexcept { return rows() * cols(); }
    bool contains(std::size_t x, std::size_t y) const noexcept {
        return x >= x_lo && x < x_hi && y >= y_lo && y < y_hi;
    }
    friend bool operator==(const SearchRange&, const SearchRange&) = default;
};

struct RegistrationResult {
    std::size_t offset_x = 0;  // row of the best window's top-left corner
    std::size_t offset_y = 0;  // column
    double mi_score = 0.0;     // nats
    std::size_t candidates_evaluated = 0;
    double elapsed = 0.0;  // seconds
    Algorithm algorithm = Algorithm::Exhaustive;
    std::size_t trim = 0;  // thermal border removed before the search
    SearchRange range;

    /// Top-left of the full thermal frame inside the optical image.
    std::ptrdiff_t frame_x() const noexcept {
        return static_cast<std::ptrdiff_t>(offset_x) - static_cast<std::ptrdiff_t>(trim);
    }
    std::ptrdiff_t frame_y() const noexcept {
        return static_cast<std::ptrdiff_t>(offset_y) - static_cast<std::ptrdiff_t>(trim);
    }
};

namespace detail {

inline void check_fits(const GrayImage& patch, const GrayImage& optical) {
    if (patch.empty() || optical.empty()) throw ShapeError("registration input is empty");
    if (patch.height() > optical.height() || patch.width() > optical.width())
        throw ShapeError("thermal image is larger than the optical image");
}

struct Best {
    double score = -std::numeric_limits<double>::infinity();
    std::size_t x = 0, y = 0;
    bool found = false;
};

/// Central half of [0, d]: [d/2 - d/4, d/2 + d/4], integer-floored, returned half-open.
inline std::pair<std::size_t, std::size_t> central_window(std::size_t d) {
    const std::size_t lo = d / 2 - d / 4;
    const std::size_t hi = std::min(d / 2 + d / 4, d);
    return {lo, hi + 1};
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace detail

/// Every offset allowed by the patch and optical sizes.
inline SearchRange full_range(const GrayImage& patch, const GrayImage& optical) {
    detail::check_fits(patch, optical);
    return {0, optical.height() - patch.height() + 1, 0, optical.width() - patch.width() + 1};
}

/// The central quarter-window used by the reduced and trimmed searches.
inline SearchRange reduced_range(const GrayImage& patch, const GrayImage& optical) {
    detail::check_fits(patch, optical);
    const auto [xl, xh] = detail::central_window(optical.height() - patch.height());
    const auto [yl, yh] = detail::central_window(optical.width() - patch.width());
    return {xl, xh, yl, yh};
}

/// Scores every offset of `range` in row-major order; the first maximum wins.
inline RegistrationResult search_exhaustive(const GrayImage& patch, const GrayImage& optical,
                                            const SearchRange& range) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t chunks = parallel::chunk_count(range.rows());
    std::vector<detail::Best> partial(chunks);
    parallel::for_chunks(range.x_lo, range.x_hi, [&](std::size_t lo, std::size_t hi, std::size_t w) {
        MiEvaluator eval(patch);
        auto& best = partial[w];
        for (std::size_t x = lo; x < hi; ++x)
            for (std::size_t y = range.y_lo; y < range.y_hi; ++y) {
                const double s = eval.score(optical, x, y);
                if (!best.found || best.score < s) best = {s, x, y, true};
            }
    });
    detail::Best best;
    for (const auto& p : partial)
        if (p.found && (!best.found || best.score < p.score)) best = p;

    RegistrationResult r;
    r.offset_x = best.x;
    r.offset_y = best.y;
    r.mi_score = best.score;
    r.candidates_evaluated = range.size();
    r.range = range;
    r.elapsed = detail::seconds_since(start);
    return r;
}

/// Row-major scan of `range` that stops once `patience` consecutive rows
/// leave the running maximum unchanged. Rows are committed in order; the
/// offsets within a row may be scored in parallel.
inline RegistrationResult search_early_stop(const GrayImage& patch, const GrayImage& optical,
                                            const SearchRange& range, std::size_t patience = 3) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t chunks = parallel::chunk_count(range.cols());
    std::vector<MiEvaluator> evaluators;
    evaluators.reserve(chunks);
    for (std::size_t i = 0; i < chunks; ++i) evaluators.emplace_back(patch);
    std::vector<double> row_scores(range.cols());

    detail::Best best;
    std::size_t evaluated = 0;
    std::size_t stale_rows = 0;
    for (std::size_t x = range.x_lo; x < range.x_hi; ++x) {
        parallel::for_chunks(range.y_lo, range.y_hi, [&](std::size_t lo, std::size_t hi, std::size_t w) {
            for (std::size_t y = lo; y < hi; ++y) row_scores[y - range.y_lo] = evaluators[w].score(optical, x, y);
        });
        evaluated += range.cols();
        bool improved = false;
        for (std::size_t y = range.y_lo; y < range.y_hi; ++y) {
            const double s = row_scores[y - range.y_lo];
            if (!best.found || best.score < s) {
                best = {s, x, y, true};
                improved = true;
            }
        }
        stale_rows = improved ? 0 : stale_rows + 1;
        if (stale_rows >= patience) break;
    }

    RegistrationResult r;
    r.offset_x = best.x;
    r.offset_y = best.y;
    r.mi_score = best.score;
    r.candidates_evaluated = evaluated;
    r.range = range;
    r.elapsed = detail::seconds_since(start);
    return r;
}

/// Scores every admissible offset.
inline RegistrationResult register_exhaustive(const GrayImage& thermal, const GrayImage& optical_gray) {
    auto r = search_exhaustive(thermal, optical_gray, full_range(thermal, optical_gray));
    r.algorithm = Algorithm::Exhaustive;
    return r;
}

/// Central quarter-window with the three-stale-rows early stop.
inline RegistrationResult register_reduced(const GrayImage& thermal, const GrayImage& optical_gray) {
    auto r = search_early_stop(thermal, optical_gray, reduced_range(thermal, optical_gray));
    r.algorithm = Algorithm::Reduced;
    return r;
}

/// Reduced search on the thermal interior left after removing `trim` pixels
/// from every edge. The offset is that of the interior; frame_x()/frame_y()
/// give the full thermal frame.
inline RegistrationResult register_trimmed(const GrayImage& thermal, const GrayImage& optical_gray,
                                           std::size_t trim = 30) {
    if (thermal.height() <= 2 * trim || thermal.width() <= 2 * trim)
        throw ShapeError("trim of " + std::to_string(trim) + " px leaves no thermal interior");
    const GrayImage interior =
        trim == 0 ? thermal : crop(thermal, trim, trim, thermal.height() - 2 * trim, thermal.width() - 2 * trim);
    auto r = search_early_stop(interior, optical_gray, reduced_range(interior, optical_gray));
    r.algorithm = Algorithm::Trimmed;
    r.trim = trim;
    return r;
}

inline RegistrationResult register_pair(Algorithm algorithm, const GrayImage& thermal,
                                        const GrayImage& optical_gray, std::size_t trim = 30) {
    switch (algorithm) {
    case Algorithm::Exhaustive: return register_exhaustive(thermal, optical_gray);
    case Algorithm::Reduced: return register_reduced(thermal, optical_gray);
    case Algorithm::Trimmed: return register_trimmed(thermal, optical_gray, trim);
    }
    throw Error("unknown registration algorithm");
}

/// Cuts the thermal-sized region out of the rescaled optical image:
/// rows [x - trim, x - trim + a), columns [y - trim, y - trim + b).
inline RgbImage crop_registered(const RgbImage& optical, const RegistrationResult& result, std::size_t a,
                                std::size_t b, std::size_t trim) {
    const auto row = static_cast<std::ptrdiff_t>(result.offset_x) - static_cast<std::ptrdiff_t>(trim);
    const auto col = static_cast<std::ptrdiff_t>(result.offset_y) - static_cast<std::ptrdiff_t>(trim);
    if (row < 0 || col < 0 || static_cast<std::size_t>(row) + a > optical.height() ||
        static_cast<std::size_t>(col) + b > optical.width())
        throw RegistrationError("crop out of bounds");
    return crop(optical, static_cast<std::size_t>(row), static_cast<std::size_t>(col), a, b);
}

// ---------------------------------------------------------------------------
// Benchmark

struct BenchRow {
    std::string pair_id;
    Algorithm algorithm = Algorithm::Exhaustive;
    std::ptrdiff_t offset_x = 0;  // full thermal frame
    std::ptrdiff_t offset_y = 0;
    double mi_nats = 0.0;
    std::size_t candidates = 0;
    double elapsed_s = 0.0;
};

struct AlgorithmSummary {
    double mean_elapsed = 0.0;
    double mean_candidates = 0.0;
    double agreement = 0.0;  // fraction of pairs whose frame offset equals the exhaustive one
};

struct BenchReport {
    std::vector<BenchRow> rows;
    AlgorithmSummary exhaustive, reduced, trimmed;
    double reduced_over_exhaustive = 0.0;  // mean time ratio
    double trimmed_over_reduced = 0.0;

    std::string to_csv() const {
        std::ostringstream out;
        out << "pair_id,algorithm,offset_x,offset_y,mi_nats,candidates,elapsed_s\n";
        out << std::setprecision(10);
        for (const auto& r : rows)
            out << r.pair_id << ',' << to_string(r.algorithm) << ',' << r.offset_x << ',' << r.offset_y << ','
                << r.mi_nats << ',' << r.candidates << ',' << r.elapsed_s << '\n';
        out << "\n# summary\n";
        out << "algorithm,mean_elapsed_s,mean_candidates,agreement_vs_exhaustive\n";
        auto line = [&](std::string_view name, const AlgorithmSummary& s) {
            out << name << ',' << s.mean_elapsed << ',' << s.mean_candidates << ',' << s.agreement << '\n';
        };
        line("exhaustive", exhaustive);
        line("reduced", reduced);
        line("trimmed", trimmed);
        out << "ratio,t_reduced/t_exhaustive," << reduced_over_exhaustive << '\n';
        out << "ratio,t_trimmed/t_reduced," << trimmed_over_reduced << '\n';
        return out.str();
    }
};

struct BenchPair {
    std::string pair_id;
    GrayImage thermal;
    GrayImage optical;
};

/// Runs all three searches on each pair and summarizes time, work and
/// agreement with the exhaustive answer.
inline BenchReport bench_registration(const std::vector<BenchPair>& pairs, std::size_t trim = 30) {
    if (pairs.empty()) throw Error("benchmark needs at least one pair");
    BenchReport rep;
    std::array<AlgorithmSummary*, 3> sums{&rep.exhaustive, &rep.reduced, &rep.trimmed};
    for (const auto& p : pairs) {
        const std::array<RegistrationResult, 3> results{register_exhaustive(p.thermal, p.optical),
                                                        register_reduced(p.thermal, p.optical),
                                                        register_trimmed(p.thermal, p.optical, trim)};
        for (std::size_t i = 0; i < 3; ++i) {
            const auto& r = results[i];
            rep.rows.push_back({p.pair_id, r.algorithm, r.frame_x(), r.frame_y(), r.mi_score,
                                r.candidates_evaluated, r.elapsed});
            sums[i]->mean_elapsed += r.elapsed;
            sums[i]->mean_candidates += static_cast<double>(r.candidates_evaluated);
            if (r.frame_x() == results[0].frame_x() && r.frame_y() == results[0].frame_y())
                sums[i]->agreement += 1.0;
        }
    }
    const auto n = static_cast<double>(pairs.size());
    for (auto* s : sums) {
        s->mean_elapsed /= n;
        s->mean_candidates /= n;
        s->agreement /= n;
    }
    rep.reduced_over_exhaustive =
        rep.exhaustive.mean_elapsed > 0 ? rep.reduced.mean_elapsed / rep.exhaustive.mean_elapsed : 0.0;
    rep.trimmed_over_reduced = rep.reduced.mean_elapsed > 0 ? rep.trimmed.mean_elapsed / rep.reduced.mean_elapsed : 0.0;
    return rep;
}

} // namespace thermocolor
