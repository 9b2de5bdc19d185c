#include "oamqec/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oamqec {

void IntegrationOptions::validate() const {
    if (!(rel_tol > 0.0) && !(abs_tol > 0.0)) {
        throw std::invalid_argument("integration needs rel_tol > 0 or abs_tol > 0");
    }
    if (rel_tol < 0.0 || abs_tol < 0.0) {
        throw std::invalid_argument("integration tolerances must be non-negative");
    }
    if (max_evaluations == 0) {
        throw std::invalid_argument("max_evaluations must be positive");
    }
}

namespace {

using cplx = std::complex<double>;

// QUADPACK qk15 abscissae and weights.
constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights at kKronrodNodes[1], [3], [5], [7].
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr std::size_t kKronrodPoints = 15;

double tolerance_for(const IntegrationOptions& opt, double magnitude) {
    return std::max(opt.abs_tol, opt.rel_tol * magnitude);
}

// Region bookkeeping shared by the scalar adaptive drivers. `seq` breaks
// ties so heap order never depends on anything but the request.
template <typename Geometry, typename Value>
struct Region {
    Geometry geometry;
    Value value;
    double error;
    int split_axis;
    std::size_t seq;
};

template <typename R>
struct ByError {
    bool operator()(const R& a, const R& b) const {
        if (a.error != b.error) {
            return a.error < b.error;
        }
        return a.seq > b.seq;
    }
};

struct Interval {
    double a;
    double b;
};

struct Kronrod1d {
    template <typename F>
    static Region<Interval, cplx> evaluate(const F& f, Interval iv, std::size_t seq) {
        const double center = 0.5 * (iv.a + iv.b);
        const double half = 0.5 * (iv.b - iv.a);
        cplx kronrod = kKronrodWeights[7] * f(center);
        cplx gauss = kGaussWeights[3] * f(center);
        for (std::size_t j = 0; j < 7; ++j) {
            const double dx = half * kKronrodNodes[j];
            const cplx sum = f(center - dx) + f(center + dx);
            kronrod += kKronrodWeights[j] * sum;
            if (j % 2 == 1) {
                gauss += kGaussWeights[j / 2] * sum;
            }
        }
        kronrod *= half;
        gauss *= half;
        return {iv, kronrod, std::abs(kronrod - gauss), 0, seq};
    }
};

template <typename RegionT, typename Evaluate, typename Split>
IntegrationResult run_adaptive(RegionT first, std::size_t cost_per_region,
                               const IntegrationOptions& opt, Evaluate&& evaluate, Split&& split) {
    const ByError<RegionT> cmp;
    std::vector<RegionT> heap;
    std::size_t evaluations = cost_per_region;
    std::size_t seq = 1;
    cplx total = first.value;
    double total_error = first.error;
    heap.push_back(std::move(first));

    while (total_error > tolerance_for(opt, std::abs(total)) &&
           evaluations + 2 * cost_per_region <= opt.max_evaluations) {
        std::pop_heap(heap.begin(), heap.end(), cmp);
        RegionT worst = std::move(heap.back());
        heap.pop_back();
        auto [left_geom, right_geom] = split(worst);
        RegionT left = evaluate(left_geom, seq++);
        RegionT right = evaluate(right_geom, seq++);
        evaluations += 2 * cost_per_region;
        total += (left.value + right.value) - worst.value;
        total_error += (left.error + right.error) - worst.error;
        heap.push_back(std::move(left));
        std::push_heap(heap.begin(), heap.end(), cmp);
        heap.push_back(std::move(right));
        std::push_heap(heap.begin(), heap.end(), cmp);
    }

    // Re-sum in a fixed order to shed the drift of the running updates.
    IntegrationResult result;
    for (const auto& r : heap) {
        result.value += r.value;
        result.error_estimate += r.error;
    }
    result.evaluations = evaluations;
    result.converged = result.error_estimate <= tolerance_for(opt, std::abs(result.value));
    return result;
}

// Genz-Malik degree-7 rule with embedded degree-5 rule on an axis-aligned box.
template <std::size_t Dim>
struct GenzMalik {
    static_assert(Dim >= 2, "Genz-Malik rules need at least two dimensions");

    struct Box {
        Point<Dim> center;
        Point<Dim> half;
    };

    static constexpr double n = static_cast<double>(Dim);
    static constexpr std::size_t points =
        1 + 4 * Dim + 2 * Dim * (Dim - 1) + (std::size_t{1} << Dim);

    static inline const double lambda2 = std::sqrt(9.0 / 70.0);
    static inline const double lambda4 = std::sqrt(9.0 / 10.0);
    static inline const double lambda5 = std::sqrt(9.0 / 19.0);
    static constexpr double w1 = (12824.0 - 9120.0 * n + 400.0 * n * n) / 19683.0;
    static constexpr double w2 = 980.0 / 6561.0;
    static constexpr double w3 = (1820.0 - 400.0 * n) / 19683.0;
    static constexpr double w4 = 200.0 / 19683.0;
    static constexpr double w5 = 6859.0 / 19683.0 / static_cast<double>(std::size_t{1} << Dim);
    static constexpr double e1 = (729.0 - 950.0 * n + 50.0 * n * n) / 729.0;
    static constexpr double e2 = 245.0 / 486.0;
    static constexpr double e3 = (265.0 - 100.0 * n) / 1458.0;
    static constexpr double e4 = 25.0 / 729.0;

    template <typename F>
    static Region<Box, cplx> evaluate(const F& f, const Box& box, std::size_t seq) {
        double volume = 1.0;
        for (std::size_t i = 0; i < Dim; ++i) {
            volume *= 2.0 * box.half[i];
        }
        const cplx f0 = f(box.center);
        cplx sum2{}, sum3{}, sum4{}, sum5{};
        const double ratio = (lambda2 * lambda2) / (lambda4 * lambda4);
        std::array<double, Dim> fourth_diff{};

        Point<Dim> x = box.center;
        for (std::size_t i = 0; i < Dim; ++i) {
            x[i] = box.center[i] - lambda2 * box.half[i];
            const cplx a1 = f(x);
            x[i] = box.center[i] + lambda2 * box.half[i];
            const cplx a2 = f(x);
            x[i] = box.center[i] - lambda4 * box.half[i];
            const cplx b1 = f(x);
            x[i] = box.center[i] + lambda4 * box.half[i];
            const cplx b2 = f(x);
            x[i] = box.center[i];
            sum2 += a1 + a2;
            sum3 += b1 + b2;
            const cplx diff = (a1 + a2 - 2.0 * f0) - ratio * (b1 + b2 - 2.0 * f0);
            fourth_diff[i] = std::abs(diff.real()) + std::abs(diff.imag());
        }
        for (std::size_t i = 0; i < Dim; ++i) {
            for (std::size_t j = i + 1; j < Dim; ++j) {
                for (int si : {-1, 1}) {
                    for (int sj : {-1, 1}) {
                        x[i] = box.center[i] + si * lambda4 * box.half[i];
                        x[j] = box.center[j] + sj * lambda4 * box.half[j];
                        sum4 += f(x);
                    }
                }
                x[i] = box.center[i];
                x[j] = box.center[j];
            }
        }
        for (std::size_t corner = 0; corner < (std::size_t{1} << Dim); ++corner) {
            for (std::size_t i = 0; i < Dim; ++i) {
                const double s = (corner >> i) & 1U ? 1.0 : -1.0;
                x[i] = box.center[i] + s * lambda5 * box.half[i];
            }
            sum5 += f(x);
        }

        const cplx degree7 = volume * (w1 * f0 + w2 * sum2 + w3 * sum3 + w4 * sum4 + w5 * sum5);
        const cplx degree5 = volume * (e1 * f0 + e2 * sum2 + e3 * sum3 + e4 * sum4);

        int axis = 0;
        for (std::size_t i = 1; i < Dim; ++i) {
            // Near-ties go to the widest axis, as in hcubature.
            if (fourth_diff[i] > fourth_diff[axis] * (1.0 + 1e-12)) {
                axis = static_cast<int>(i);
            } else if (std::abs(fourth_diff[i] - fourth_diff[axis]) <=
                           1e-12 * fourth_diff[axis] &&
                       box.half[i] > box.half[axis]) {
                axis = static_cast<int>(i);
            }
        }
        return {box, degree7, std::abs(degree7 - degree5), axis, seq};
    }

    static IntegrationResult integrate(const IntegrationRequest<Dim>& req) {
        req.options.validate();
        Box root;
        for (std::size_t i = 0; i < Dim; ++i) {
            if (!(req.lower[i] < req.upper[i])) {
                throw std::invalid_argument("integration box needs lower < upper on every axis");
            }
            root.center[i] = 0.5 * (req.lower[i] + req.upper[i]);
            root.half[i] = 0.5 * (req.upper[i] - req.lower[i]);
        }
        const auto& f = req.integrand;
        auto eval = [&](const Box& b, std::size_t seq) { return evaluate(f, b, seq); };
        auto split = [](const Region<Box, cplx>& r) {
            Box left = r.geometry;
            Box right = r.geometry;
            const auto axis = static_cast<std::size_t>(r.split_axis);
            const double h = 0.5 * r.geometry.half[axis];
            left.half[axis] = h;
            right.half[axis] = h;
            left.center[axis] -= h;
            right.center[axis] += h;
            return std::pair{left, right};
        };
        return run_adaptive(eval(root, 0), points, req.options, eval, split);
    }
};

}  // namespace

IntegrationResult integrate_1d(const IntegrationRequest<1>& req) {
    req.options.validate();
    if (!(req.lower[0] < req.upper[0])) {
        throw std::invalid_argument("integration interval needs lower < upper");
    }
    auto scalar = [&](double x) { return req.integrand(Point<1>{x}); };
    auto eval = [&](const Interval& iv, std::size_t seq) {
        return Kronrod1d::evaluate(scalar, iv, seq);
    };
    auto split = [](const Region<Interval, cplx>& r) {
        const double mid = 0.5 * (r.geometry.a + r.geometry.b);
        return std::pair{Interval{r.geometry.a, mid}, Interval{mid, r.geometry.b}};
    };
    return run_adaptive(eval(Interval{req.lower[0], req.upper[0]}, 0), kKronrodPoints,
                        req.options, eval, split);
}

IntegrationResult integrate_1d(const std::function<std::complex<double>(double)>& f, double a,
                               double b, const IntegrationOptions& options) {
    IntegrationRequest<1> req;
    req.integrand = [&f](const Point<1>& x) { return f(x[0]); };
    req.lower = {a};
    req.upper = {b};
    req.options = options;
    return integrate_1d(req);
}

IntegrationResult integrate_2d(const IntegrationRequest<2>& req) {
    return GenzMalik<2>::integrate(req);
}

IntegrationResult integrate_3d(const IntegrationRequest<3>& req) {
    return GenzMalik<3>::integrate(req);
}

namespace {

struct VectorRegion {
    Interval iv;
    std::vector<double> values;
    double error;
    std::size_t seq;
};

}  // namespace

VectorIntegrationResult integrate_1d_vector(
    const std::function<void(double, std::span<double>)>& integrand, std::size_t components,
    double a, double b, const IntegrationOptions& options) {
    options.validate();
    if (!(a < b)) {
        throw std::invalid_argument("integration interval needs lower < upper");
    }
    if (components == 0) {
        throw std::invalid_argument("vector integrand needs at least one component");
    }
    std::vector<double> sample(components);
    std::vector<double> kronrod(components);
    std::vector<double> gauss(components);

    auto evaluate = [&](Interval iv, std::size_t seq) {
        const double center = 0.5 * (iv.a + iv.b);
        const double half = 0.5 * (iv.b - iv.a);
        integrand(center, sample);
        for (std::size_t c = 0; c < components; ++c) {
            kronrod[c] = kKronrodWeights[7] * sample[c];
            gauss[c] = kGaussWeights[3] * sample[c];
        }
        for (std::size_t j = 0; j < 7; ++j) {
            const double dx = half * kKronrodNodes[j];
            for (double x : {center - dx, center + dx}) {
                integrand(x, sample);
                for (std::size_t c = 0; c < components; ++c) {
                    kronrod[c] += kKronrodWeights[j] * sample[c];
                    if (j % 2 == 1) {
                        gauss[c] += kGaussWeights[j / 2] * sample[c];
                    }
                }
            }
        }
        VectorRegion r{iv, std::vector<double>(components), 0.0, seq};
        for (std::size_t c = 0; c < components; ++c) {
            r.values[c] = half * kronrod[c];
            r.error = std::max(r.error, std::abs(half * (kronrod[c] - gauss[c])));
        }
        return r;
    };

    auto cmp = [](const VectorRegion& x, const VectorRegion& y) {
        if (x.error != y.error) {
            return x.error < y.error;
        }
        return x.seq > y.seq;
    };
    std::vector<VectorRegion> heap;
    heap.push_back(evaluate({a, b}, 0));
    std::size_t evaluations = kKronrodPoints;
    std::size_t seq = 1;
    double total_error = heap.front().error;
    std::vector<double> total = heap.front().values;

    auto magnitude = [&] {
        double m = 0.0;
        for (double v : total) {
            m = std::max(m, std::abs(v));
        }
        return m;
    };

    while (total_error > tolerance_for(options, magnitude()) &&
           evaluations + 2 * kKronrodPoints <= options.max_evaluations) {
        std::pop_heap(heap.begin(), heap.end(), cmp);
        VectorRegion worst = std::move(heap.back());
        heap.pop_back();
        const double mid = 0.5 * (worst.iv.a + worst.iv.b);
        VectorRegion left = evaluate({worst.iv.a, mid}, seq++);
        VectorRegion right = evaluate({mid, worst.iv.b}, seq++);
        evaluations += 2 * kKronrodPoints;
        for (std::size_t c = 0; c < components; ++c) {
            total[c] += left.values[c] + right.values[c] - worst.values[c];
        }
        total_error += left.error + right.error - worst.error;
        heap.push_back(std::move(left));
        std::push_heap(heap.begin(), heap.end(), cmp);
        heap.push_back(std::move(right));
        std::push_heap(heap.begin(), heap.end(), cmp);
    }

    VectorIntegrationResult result;
    result.values.assign(components, 0.0);
    for (const auto& r : heap) {
        for (std::size_t c = 0; c < components; ++c) {
            result.values[c] += r.values[c];
        }
        result.error_estimate += r.error;
    }
    total = result.values;
    result.evaluations = evaluations;
    result.converged = result.error_estimate <= tolerance_for(options, magnitude());
    return result;
}

GaussLegendreRule gauss_legendre(std::size_t n) {
    if (n == 0) {
        throw std::invalid_argument("Gauss-Legendre rule needs at least one node");
    }
    GaussLegendreRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    if (n == 1) {
        rule.nodes[0] = 0.0;
        rule.weights[0] = 2.0;
        return rule;
    }
    const auto nd = static_cast<double>(n);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (nd + 0.5));
        double derivative = 1.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const auto kd = static_cast<double>(k);
                const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
                p0 = p1;
                p1 = p2;
            }
            derivative = nd * (x * p1 - p0) / (x * x - 1.0);
            const double step = p1 / derivative;
            x -= step;
            if (std::abs(step) < 1e-16) {
                break;
            }
        }
        const double w = 2.0 / ((1.0 - x * x) * derivative * derivative);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

GaussLegendreRule composite_gauss_legendre(double a, double b, std::size_t panels,
                                           std::size_t order) {
    if (!(a < b) || panels == 0) {
        throw std::invalid_argument("composite rule needs a < b and at least one panel");
    }
    const GaussLegendreRule base = gauss_legendre(order);
    GaussLegendreRule rule;
    rule.nodes.reserve(panels * order);
    rule.weights.reserve(panels * order);
    const double width = (b - a) / static_cast<double>(panels);
    for (std::size_t k = 0; k < panels; ++k) {
        const double lo = a + width * static_cast<double>(k);
        for (std::size_t i = 0; i < order; ++i) {
            rule.nodes.push_back(lo + 0.5 * width * (base.nodes[i] + 1.0));
            rule.weights.push_back(0.5 * width * base.weights[i]);
        }
    }
    return rule;
}

}  // namespace oamqec
