#pragma once

// Chebyshev step sizes, the fractal permutation, and the schedule transforms
// (reverse / repeat / concat / slow-step insertion / waltz / spiky cycles).
//
// Index conventions: node indices and permutation entries are 1-based
// (gamma_1 is the smallest node, so 1/gamma_1 is the largest step). Step
// vectors are stored 0-based; ScheduleSpec::step(t) takes a 1-based t.

#include <chebsched/errors.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace chebsched {

enum class OrderingKind {
    fractal,
    reverse_fractal,
    increasing,  // step sizes ascending: smallest step first
    decreasing,  // step sizes descending: largest step first
    random,
    explicit_permutation,
};

struct Ordering {
    OrderingKind kind = OrderingKind::fractal;
    std::uint64_t seed = 0;
    std::vector<int> permutation;  // explicit only; 1-based node indices

    static Ordering fractal() { return {OrderingKind::fractal, 0, {}}; }
    static Ordering reverse_fractal() { return {OrderingKind::reverse_fractal, 0, {}}; }
    static Ordering increasing() { return {OrderingKind::increasing, 0, {}}; }
    static Ordering decreasing() { return {OrderingKind::decreasing, 0, {}}; }
    static Ordering random(std::uint64_t seed) { return {OrderingKind::random, seed, {}}; }
    static Ordering explicit_order(std::vector<int> perm) {
        return {OrderingKind::explicit_permutation, 0, std::move(perm)};
    }
};

[[nodiscard]] inline std::string_view to_string(OrderingKind kind) {
    switch (kind) {
        case OrderingKind::fractal: return "fractal";
        case OrderingKind::reverse_fractal: return "reverse_fractal";
        case OrderingKind::increasing: return "increasing";
        case OrderingKind::decreasing: return "decreasing";
        case OrderingKind::random: return "random";
        case OrderingKind::explicit_permutation: return "explicit";
    }
    return "unknown";
}

[[nodiscard]] inline OrderingKind ordering_kind_from_string(std::string_view name) {
    for (auto kind : {OrderingKind::fractal, OrderingKind::reverse_fractal,
                      OrderingKind::increasing, OrderingKind::decreasing,
                      OrderingKind::random, OrderingKind::explicit_permutation}) {
        if (to_string(kind) == name) return kind;
    }
    throw invalid_argument("unknown ordering '" + std::string(name) + "'");
}

[[nodiscard]] constexpr bool is_power_of_two(std::int64_t n) {
    return n >= 1 && std::has_single_bit(static_cast<std::uint64_t>(n));
}

/// An ordered learning-rate schedule together with the (m, M, T) it came from.
struct ScheduleSpec {
    double m = 1.0;
    double M = 1.0;
    int T = 1;  // number of Chebyshev nodes in the base construction
    Ordering ordering;
    std::vector<double> steps;
    std::vector<int> node_index;  // gamma index behind each step; 0 = not a node
    bool certified = true;
    std::vector<std::string> notes;

    [[nodiscard]] std::size_t size() const { return steps.size(); }
    [[nodiscard]] double step(std::size_t t) const { return steps.at(t - 1); }

    [[nodiscard]] double theta() const {
        return m < M ? (M + m) / (M - m) : std::numeric_limits<double>::infinity();
    }
    [[nodiscard]] double rho() const {
        const double a = std::sqrt(M), b = std::sqrt(m);
        return (a - b) / (a + b);
    }
    [[nodiscard]] double kappa_hat() const { return M / m; }
};

namespace detail {

inline void check_spectrum(double m, double M) {
    if (!(m > 0.0) || !std::isfinite(m)) throw invalid_argument("m must be a positive finite number");
    if (!(M >= m) || !std::isfinite(M)) throw invalid_argument("M must be finite and satisfy M >= m");
}

}  // namespace detail

/// gamma_t = (M+m)/2 - (M-m)/2 cos((t - 1/2) pi / T), t = 1..T (increasing in t).
[[nodiscard]] inline std::vector<double> cheb_nodes(double m, double M, int T) {
    detail::check_spectrum(m, M);
    if (T < 1) throw invalid_argument("T must be at least 1");
    const double center = 0.5 * (M + m);
    const double radius = 0.5 * (M - m);
    std::vector<double> nodes(static_cast<std::size_t>(T));
    for (int t = 1; t <= T; ++t) {
        const double angle = (t - 0.5) * std::numbers::pi / T;
        nodes[static_cast<std::size_t>(t - 1)] = center - radius * std::cos(angle);
    }
    return nodes;
}

/// sigma_T: sigma_1 = [1], sigma_2T = interlace(sigma_T, 2T + 1 - sigma_T).
[[nodiscard]] inline std::vector<int> fractal_perm(int T) {
    if (!is_power_of_two(T)) throw unsupported_horizon("T must be a power of 2 (got " + std::to_string(T) + ")");
    std::vector<int> perm{1};
    perm.reserve(static_cast<std::size_t>(T));
    while (static_cast<int>(perm.size()) < T) {
        const int n = static_cast<int>(perm.size());
        std::vector<int> next(2 * perm.size());
        for (std::size_t i = 0; i < perm.size(); ++i) {
            next[2 * i] = perm[i];
            next[2 * i + 1] = 2 * n + 1 - perm[i];
        }
        perm = std::move(next);
    }
    return perm;
}

[[nodiscard]] inline bool is_permutation_of_1_to_n(std::span<const int> perm) {
    std::vector<char> seen(perm.size() + 1, 0);
    for (int v : perm) {
        if (v < 1 || static_cast<std::size_t>(v) > perm.size() || seen[static_cast<std::size_t>(v)]) return false;
        seen[static_cast<std::size_t>(v)] = 1;
    }
    return true;
}

/// Node order (1-based gamma indices, one per step) realized by an ordering.
[[nodiscard]] inline std::vector<int> node_order(const Ordering& ordering, int T) {
    std::vector<int> order(static_cast<std::size_t>(T));
    switch (ordering.kind) {
        case OrderingKind::fractal:
            return fractal_perm(T);
        case OrderingKind::reverse_fractal: {
            auto perm = fractal_perm(T);
            std::reverse(perm.begin(), perm.end());
            return perm;
        }
        case OrderingKind::increasing:
            std::iota(order.rbegin(), order.rend(), 1);
            return order;
        case OrderingKind::decreasing:
            std::iota(order.begin(), order.end(), 1);
            return order;
        case OrderingKind::random: {
            std::iota(order.begin(), order.end(), 1);
            std::mt19937_64 rng(ordering.seed);
            std::shuffle(order.begin(), order.end(), rng);
            return order;
        }
        case OrderingKind::explicit_permutation:
            if (static_cast<int>(ordering.permutation.size()) != T || !is_permutation_of_1_to_n(ordering.permutation))
                throw invalid_argument("explicit ordering must be a permutation of 1..T");
            return ordering.permutation;
    }
    throw invalid_argument("unknown ordering");
}

/// eta_t = 1 / gamma_{order(t)}.
[[nodiscard]] inline ScheduleSpec build_schedule(double m, double M, int T, const Ordering& ordering) {
    const auto nodes = cheb_nodes(m, M, T);
    ScheduleSpec spec;
    spec.m = m;
    spec.M = M;
    spec.T = T;
    spec.ordering = ordering;
    spec.node_index = node_order(ordering, T);
    spec.steps.reserve(spec.node_index.size());
    for (int idx : spec.node_index) spec.steps.push_back(1.0 / nodes[static_cast<std::size_t>(idx - 1)]);
    return spec;
}

[[nodiscard]] inline ScheduleSpec fractal_schedule(double m, double M, int T) {
    return build_schedule(m, M, T, Ordering::fractal());
}

// ---------------------------------------------------------------------------
// Transforms

struct Reverse {};
struct Repeat {
    int cycles = 1;
};
struct Concat {
    ScheduleSpec other;
};
enum class SlowPlacement { front, back, at_index };
struct InsertSlow {
    int count = 1;
    double value = 0.0;
    SlowPlacement placement = SlowPlacement::front;
    std::size_t index = 0;  // 0-based insertion point for at_index
};
/// Triplets (eta_{2t-1}, eta_{2t}, 1/M_est).
struct Waltz {
    double M_est = 1.0;
};

using TransformOp = std::variant<Reverse, Repeat, Concat, InsertSlow, Waltz>;

/// Reversal maps position t to T + 1 - t.
[[nodiscard]] inline ScheduleSpec reversed(const ScheduleSpec& spec) {
    ScheduleSpec out = spec;
    std::reverse(out.steps.begin(), out.steps.end());
    std::reverse(out.node_index.begin(), out.node_index.end());
    switch (spec.ordering.kind) {
        case OrderingKind::fractal: out.ordering = Ordering::reverse_fractal(); break;
        case OrderingKind::reverse_fractal: out.ordering = Ordering::fractal(); break;
        case OrderingKind::increasing: out.ordering = Ordering::decreasing(); break;
        case OrderingKind::decreasing: out.ordering = Ordering::increasing(); break;
        default: out.notes.emplace_back("reverse");
    }
    return out;
}

[[nodiscard]] inline ScheduleSpec repeated(const ScheduleSpec& spec, int cycles) {
    if (cycles < 1) throw invalid_argument("repeat: cycles must be >= 1");
    if (cycles == 1) return spec;
    ScheduleSpec out = spec;
    out.steps.clear();
    out.node_index.clear();
    for (int c = 0; c < cycles; ++c) {
        out.steps.insert(out.steps.end(), spec.steps.begin(), spec.steps.end());
        out.node_index.insert(out.node_index.end(), spec.node_index.begin(), spec.node_index.end());
    }
    out.notes.push_back("repeat(" + std::to_string(cycles) + ")");
    return out;
}

[[nodiscard]] inline ScheduleSpec concatenated(const ScheduleSpec& head, const ScheduleSpec& tail) {
    ScheduleSpec out = head;
    out.steps.insert(out.steps.end(), tail.steps.begin(), tail.steps.end());
    out.node_index.insert(out.node_index.end(), tail.node_index.begin(), tail.node_index.end());
    out.certified = head.certified && tail.certified;
    if (head.m != tail.m || head.M != tail.M) {
        out.certified = false;
        out.notes.emplace_back("concat: mismatched (m, M); bounds are not certified");
    } else {
        out.notes.push_back("concat(T=" + std::to_string(tail.T) + ")");
    }
    return out;
}

/// Inserts slow steps. Values above 2/M are allowed but void the certificate.
[[nodiscard]] inline ScheduleSpec with_slow_steps(const ScheduleSpec& spec, const InsertSlow& op) {
    if (op.count < 0) throw invalid_argument("insert_slow: count must be non-negative");
    if (!(op.value >= 0.0) || !std::isfinite(op.value)) throw invalid_argument("insert_slow: value must be finite and >= 0");
    std::size_t at = 0;
    switch (op.placement) {
        case SlowPlacement::front: at = 0; break;
        case SlowPlacement::back: at = spec.steps.size(); break;
        case SlowPlacement::at_index:
            if (op.index > spec.steps.size()) throw invalid_argument("insert_slow: index past the end of the schedule");
            at = op.index;
            break;
    }
    ScheduleSpec out = spec;
    const auto n = static_cast<std::size_t>(op.count);
    out.steps.insert(out.steps.begin() + static_cast<std::ptrdiff_t>(at), n, op.value);
    out.node_index.insert(out.node_index.begin() + static_cast<std::ptrdiff_t>(at), n, 0);
    out.notes.push_back("insert_slow(" + std::to_string(op.count) + ")");
    if (op.value > 2.0 / spec.M) {
        out.certified = false;
        out.notes.emplace_back("warning: slow step exceeds 2/M; stability guarantee lapses");
    }
    return out;
}

[[nodiscard]] inline ScheduleSpec waltz(const ScheduleSpec& spec, double M_est) {
    if (!(M_est > 0.0)) throw invalid_argument("waltz: M_est must be positive");
    if (spec.steps.size() % 2 != 0) throw invalid_argument("waltz: schedule length must be even");
    ScheduleSpec out = spec;
    out.steps.clear();
    out.node_index.clear();
    for (std::size_t i = 0; i < spec.steps.size(); i += 2) {
        out.steps.insert(out.steps.end(), {spec.steps[i], spec.steps[i + 1], 1.0 / M_est});
        out.node_index.insert(out.node_index.end(), {spec.node_index[i], spec.node_index[i + 1], 0});
    }
    out.notes.emplace_back("waltz");
    if (1.0 / M_est > 2.0 / spec.M) {
        out.certified = false;
        out.notes.emplace_back("warning: waltz step 1/M_est exceeds 2/M");
    }
    return out;
}

[[nodiscard]] inline ScheduleSpec transform(const ScheduleSpec& spec, const TransformOp& op) {
    return std::visit(
        [&](const auto& o) -> ScheduleSpec {
            using Op = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<Op, Reverse>) return reversed(spec);
            else if constexpr (std::is_same_v<Op, Repeat>) return repeated(spec, o.cycles);
            else if constexpr (std::is_same_v<Op, Concat>) return concatenated(spec, o.other);
            else if constexpr (std::is_same_v<Op, InsertSlow>) return with_slow_steps(spec, o);
            else return waltz(spec, o.M_est);
        },
        op);
}

/// Cycles of one large step eta_plus followed by n small steps eta_minus.
[[nodiscard]] inline ScheduleSpec spiky_schedule(double eta_plus, double eta_minus, int n, int cycles) {
    if (!(eta_minus > 0.0) || !(eta_plus >= eta_minus)) throw invalid_argument("spiky: need eta_plus >= eta_minus > 0");
    if (n < 1 || cycles < 1) throw invalid_argument("spiky: n and cycles must be >= 1");
    ScheduleSpec out;
    out.m = 1.0 / eta_plus;
    out.M = 1.0 / eta_minus;
    out.T = n + 1;
    out.ordering = Ordering::explicit_order({});
    out.certified = false;
    for (int c = 0; c < cycles; ++c) {
        out.steps.push_back(eta_plus);
        out.steps.insert(out.steps.end(), static_cast<std::size_t>(n), eta_minus);
    }
    out.node_index.assign(out.steps.size(), 0);
    out.notes.emplace_back("spiky");
    return out;
}

struct ScheduleStats {
    double min_step = 0.0;
    double max_step = 0.0;
    double mean_step = 0.0;
    std::size_t count_above_2_over_M = 0;
};

/// Summary statistics. The mean is accumulated in ascending node-index order
/// when node indices are known, so it does not depend on the permutation.
[[nodiscard]] inline ScheduleStats schedule_stats(const ScheduleSpec& spec) {
    if (spec.steps.empty()) throw invalid_argument("schedule_stats: empty schedule");
    std::vector<std::size_t> idx(spec.steps.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (spec.node_index.size() == spec.steps.size()) {
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return spec.node_index[a] < spec.node_index[b];
        });
    }
    ScheduleStats st;
    st.min_step = *std::min_element(spec.steps.begin(), spec.steps.end());
    st.max_step = *std::max_element(spec.steps.begin(), spec.steps.end());
    double sum = 0.0;
    for (std::size_t i : idx) sum += spec.steps[i];
    st.mean_step = sum / static_cast<double>(spec.steps.size());
    const double threshold = 2.0 / spec.M;
    st.count_above_2_over_M = static_cast<std::size_t>(
        std::count_if(spec.steps.begin(), spec.steps.end(), [&](double s) { return s > threshold; }));
    return st;
}

/// FNV-1a over the IEEE bit patterns of the steps.
[[nodiscard]] inline std::uint64_t schedule_hash(std::span<const double> steps) {
    std::uint64_t h = 1469598103934665603ULL;
    for (double s : steps) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &s, sizeof bits);
        for (int k = 0; k < 8; ++k) {
            h ^= (bits >> (8 * k)) & 0xffU;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

}  // namespace chebsched
