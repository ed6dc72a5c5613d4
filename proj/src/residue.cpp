#include "polymer/residue.hpp"

#include "polymer/digest.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>

namespace polymer {

namespace {

struct Quad {
    double value = 0.0;
    double error = 0.0;
};

void certify(const Quad& q, const char* what) {
    if (!std::isfinite(q.value) || q.error > kQuadratureTolerance * std::max(1.0, std::abs(q.value)))
        throw QuadratureError(std::string("quadrature did not converge: ") + what);
}

// Two instances so an integrand may itself integrate (outer -> inner).
boost::math::quadrature::tanh_sinh<double>& integrator(bool outer) {
    thread_local boost::math::quadrature::tanh_sinh<double> outer_rule, inner_rule;
    return outer ? outer_rule : inner_rule;
}

template <typename F>
Quad double_exponential(F&& f, double a, double b, bool outer = true) {
    if (a == b) return {};
    double sign = 1.0;
    if (a > b) {
        std::swap(a, b);
        sign = -1.0;
    }
    double err = 0.0, l1 = 0.0;
    const double v = integrator(outer).integrate(f, a, b, 1e-12, &err, &l1);
    return {sign * v, err};
}

// int_lo^hi (u - s)^a g(u) du with lo - s = lo_gap >= 0 given exactly. The
// substitution w = (u - s)^{a+1} turns the algebraic endpoint singularity
// into a bounded integrand.
template <typename G>
Quad power_integral(double s, double lo_gap, double hi_gap, double a, G&& g) {
    const double p = a + 1.0;
    const double w_lo = std::pow(lo_gap, p);
    const double w_hi = std::pow(hi_gap, p);
    const double inv = 1.0 / p;
    // Rescaled to [0, 1] so the error estimate tracks short intervals.
    const double width = w_hi - w_lo;
    Quad q = double_exponential([&](double x) { return g(s + std::pow(w_lo + width * x, inv)); }, 0.0, 1.0,
                                false);
    return {q.value * width / p, q.error * std::abs(width / p)};
}

// int_0^upper s^{1-2H} G(s) ds through s = z^{1/(2-2H)}.
template <typename G>
Quad origin_weighted(double upper, double h, G&& g) {
    const double e = 2.0 - 2.0 * h;
    const double q = 1.0 / e;
    Quad r = double_exponential([&](double z) { return g(std::pow(z, q)); }, 0.0, std::pow(upper, e));
    return {r.value / e, r.error / e};
}

// Absolute error of a * b from the errors of both factors.
double product_error(const Quad& a, const Quad& b) {
    return std::abs(a.value) * b.error + std::abs(b.value) * a.error + a.error * b.error;
}

bool is_half(Hurst hurst) { return hurst.value() == 0.5; }

// K_H(t,s) with the gap t - s supplied separately for accuracy near s = t.
Quad kernel_impl(double t, double s, double gap, Hurst hurst) {
    const double h = hurst.value();
    if (is_half(hurst)) return {1.0, 0.0};
    const double c = kernel_constant(hurst);
    if (hurst.above_half()) {
        // c s^{1/2-H} int_s^t (u-s)^{H-3/2} u^{H-1/2} du
        Quad q = power_integral(s, 0.0, gap, h - 1.5, [h](double u) { return std::pow(u, h - 0.5); });
        const double scale = c * std::pow(s, 0.5 - h);
        return {scale * q.value, scale * q.error};
    }
    // s^{1/2-H} int_s^t u^{H-3/2} (u-s)^{H-1/2} du = s^{H-1/2} I(t/s) with
    // I(x) = int_{1/x}^1 y^{-2H} (1-y)^{H-1/2} dy, taken through y = z^{1/(1-2H)}.
    const double e = 1.0 - 2.0 * h;
    const double q = 1.0 / e;
    const double width = -std::expm1(e * std::log1p(-gap / t));  // 1 - (s/t)^e
    // 1 - z = width v^m with m = 1/(H+1/2) absorbs the singularity at z = 1.
    const double m = 1.0 / (h + 0.5);
    Quad tail = double_exponential(
        [&](double v) {
            const double gap_z = width * std::pow(v, m);
            const double ratio = gap_z == 0.0 ? q : -std::expm1(q * std::log1p(-gap_z)) / gap_z;
            return m * std::pow(width * ratio, h - 0.5);
        },
        0.0, 1.0, false);
    tail.value *= width;
    tail.error *= width;
    const double first = std::pow(t / s, h - 0.5) * std::pow(gap, h - 0.5);
    const double scale = (h - 0.5) * std::pow(s, h - 0.5) / e;
    return {c * (first - scale * tail.value), c * std::abs(scale) * tail.error};
}

// J(s) = int_{t1}^{t2} (u-s)^{H-3/2} u^{H-1/2} du, for s < t1 with t1 - s = gap.
Quad rate_integral(double s, double gap, double t1, double t2, Hurst hurst) {
    const double h = hurst.value();
    return power_integral(s, gap, gap + (t2 - t1), h - 1.5, [h](double u) { return std::pow(u, h - 0.5); });
}

}  // namespace

double kernel_constant(Hurst hurst) {
    const double h = hurst.value();
    if (is_half(hurst)) return 1.0;
    if (hurst.above_half()) return std::sqrt(h * (2.0 * h - 1.0) / boost::math::beta(2.0 - 2.0 * h, h - 0.5));
    return std::sqrt(2.0 * h / ((1.0 - 2.0 * h) * boost::math::beta(1.0 - 2.0 * h, h + 0.5)));
}

double kernel_rate_constant(Hurst hurst) {
    if (is_half(hurst)) return 0.0;
    if (hurst.above_half()) return kernel_constant(hurst);
    return kernel_constant(hurst) * (hurst.value() - 0.5);
}

KernelEval volterra_kernel(double t, double s, Hurst hurst) {
    if (!(0.0 < s && s < t)) throw std::domain_error("volterra_kernel: need 0 < s < t");
    const Quad q = kernel_impl(t, s, t - s, hurst);
    certify(q, "volterra_kernel");
    return {t, s, q.value, q.error};
}

KernelEval kernel_isometry(double t, double s, Hurst hurst) {
    if (!(t > 0.0 && s > 0.0)) throw std::domain_error("kernel_isometry: need t, s > 0");
    const double hi = std::min(t, s);
    // K(t,r) K(s,r) ~ r^{e-1} near 0; z = r^e makes the integrand bounded there.
    const double e = 1.0 - std::abs(2.0 * hurst.value() - 1.0);
    const double z_hi = std::pow(hi, e);
    double inner_err = 0.0;
    const Quad q = double_exponential(
        [&](double z, double zc) {
            const double z_exact = zc < 0.0 ? -zc : z;
            const double r = std::pow(z_exact, 1.0 / e);
            const double to_hi = zc > 0.0 ? -hi * std::expm1(std::log1p(-zc / z_hi) / e) : hi - r;
            if (r <= 0.0 || to_hi <= 0.0) return 0.0;
            const Quad kt = kernel_impl(t, r, (t - hi) + to_hi, hurst);
            const Quad ks = kernel_impl(s, r, (s - hi) + to_hi, hurst);
            // Both kernels are positive, so a relative bound per point carries
            // over to the integral.
            const double prod = kt.value * ks.value;
            if (prod != 0.0) inner_err = std::max(inner_err, product_error(kt, ks) / std::abs(prod));
            return prod * r / (e * z_exact);
        },
        0.0, z_hi);
    return {t, s, q.value, q.error + inner_err * std::abs(q.value)};
}

void YCovQuery::validate() const {
    if (n < 1 || k < 1) throw std::domain_error("YCovQuery: n, k must be >= 1");
    if (u < n + k || u > n + k + 1) throw std::domain_error("YCovQuery: u outside [n+k, n+k+1]");
}

KernelEval y_cov(const YCovQuery& a, const YCovQuery& b, Hurst hurst) {
    a.validate();
    b.validate();
    if (a.n != b.n || a.k != b.k) throw std::domain_error("y_cov: queries must share (n, k)");
    const double h = hurst.value();
    const double u = a.u, v = b.u;
    const double pref = std::pow(u * v, h - 0.5);
    const Quad q = origin_weighted(a.n, h, [&](double s) {
        return pref * std::pow(u - s, h - 1.5) * std::pow(v - s, h - 1.5);
    });
    certify(q, "y_cov");
    return {u, v, q.value, q.error};
}

KernelEval y_increment_var(const YCovQuery& a, const YCovQuery& b, Hurst hurst) {
    a.validate();
    b.validate();
    if (a.n != b.n || a.k != b.k) throw std::domain_error("y_increment_var: queries must share (n, k)");
    const double h = hurst.value();
    const double u = a.u, v = b.u;
    const double pu = std::pow(u, h - 0.5), pv = std::pow(v, h - 0.5);
    const Quad q = origin_weighted(a.n, h, [&](double s) {
        const double diff = pu * std::pow(u - s, h - 1.5) - pv * std::pow(v - s, h - 1.5);
        return diff * diff;
    });
    certify(q, "y_increment_var");
    return {u, v, q.value, q.error};
}

std::vector<std::pair<double, double>> default_window_pairs() {
    return {{0.0, 1.0}, {0.25, 0.75}, {0.1, 0.4}, {0.6, 0.602}, {0.95, 0.05}};
}

LipschitzScan lipschitz_ratio_scan(std::span<const int> n_grid,
                                   std::span<const std::pair<double, double>> pairs, Hurst hurst) {
    if (n_grid.empty()) throw std::invalid_argument("lipschitz_ratio_scan: empty n grid");
    const double h = hurst.value();
    LipschitzScan scan;
    const int last_n = *std::max_element(n_grid.begin(), n_grid.end());
    for (int n : n_grid) {
        for (int k = 1; k <= n; ++k) {
            const double scale = std::pow(1.0 + double(k) / n, 2.0 * h - 1.0);
            for (auto [fa, fb] : pairs) {
                const YCovQuery qa{n, k, n + k + fa}, qb{n, k, n + k + fb};
                const double sep = qa.u - qb.u;
                if (std::abs(sep) < kMinSeparation) continue;
                const KernelEval inc = y_increment_var(qa, qb, hurst);
                const KernelEval var = y_cov(qa, qa, hurst);
                LipschitzRow row;
                row.n = n;
                row.k = k;
                row.u = qa.u;
                row.v = qb.u;
                row.hurst = h;
                row.ratio1 = inc.value / (scale * std::pow(k, 2.0 * h - 4.0) * sep * sep);
                row.ratio2 = var.value / (scale * std::pow(k, 2.0 * h - 2.0));
                row.quadrature_error = inc.quadrature_error + var.quadrature_error;
                scan.max_ratio1 = std::max(scan.max_ratio1, row.ratio1);
                scan.max_ratio2 = std::max(scan.max_ratio2, row.ratio2);
                if (n != last_n) {
                    scan.prior_max_ratio1 = std::max(scan.prior_max_ratio1, row.ratio1);
                    scan.prior_max_ratio2 = std::max(scan.prior_max_ratio2, row.ratio2);
                }
                scan.rows.push_back(row);
            }
        }
    }
    auto change = [](double now, double before) {
        return before > 0.0 ? std::abs(now - before) / before : 0.0;
    };
    scan.refinement_change1 = change(scan.max_ratio1, scan.prior_max_ratio1);
    scan.refinement_change2 = change(scan.max_ratio2, scan.prior_max_ratio2);
    return scan;
}

std::vector<std::tuple<int, double, double>> default_decomposition_cases() {
    return {{2, 2.0, 3.0},   {2, 2.25, 2.75}, {2, 2.5, 2.6}, {3, 3.0, 3.5},  {3, 3.1, 4.0},
            {4, 4.0, 4.01},  {5, 5.3, 5.9},   {6, 6.0, 7.0}, {8, 8.5, 9.0},  {10, 10.2, 10.7}};
}

std::vector<double> default_isometry_grid() { return {0.5, 1.0, 1.5, 2.5, 4.0, 7.0}; }

DecompositionCheck decomposition_variance_check(int l, double t1, double t2, Hurst hurst,
                                                double tolerance) {
    if (l < 2) throw std::domain_error("decomposition: l must be >= 2");
    if (!(l <= t1 && t1 < t2 && t2 <= l + 1))
        throw std::domain_error("decomposition: need l <= t1 < t2 <= l+1");
    DecompositionCheck out;
    out.l = l;
    out.t1 = t1;
    out.t2 = t2;
    const double h = hurst.value();
    out.total = std::pow(t2 - t1, 2.0 * h);

    if (is_half(hurst)) {
        out.residue = 0.0;
        out.innovation = t2 - t1;
    } else {
        const double c = kernel_rate_constant(hurst);
        const double split = l - 1.0;
        double residue_err = 0.0, before_err = 0.0, after_err = 0.0;

        // Residue: D(s) = c s^{1/2-H} J(s), smooth on [0, l-1] apart from s^{1-2H}.
        const Quad residue = origin_weighted(split, h, [&](double s) {
            const Quad j = rate_integral(s, t1 - s, t1, t2, hurst);
            residue_err = std::max(residue_err, c * c * product_error(j, j));
            return c * c * j.value * j.value;
        });

        // Innovation on [l-1, t1): D(s)^2 with a possible singularity at s = t1.
        const Quad before = double_exponential(
            [&](double s, double sc) {
                const double gap = sc > 0.0 ? sc : t1 - s;
                if (gap <= 0.0) return 0.0;
                const Quad j = rate_integral(s, gap, t1, t2, hurst);
                const double w = c * c * std::pow(s, 1.0 - 2.0 * h);
                before_err = std::max(before_err, w * product_error(j, j));
                return w * j.value * j.value;
            },
            split, t1);

        // Innovation on [t1, t2]: K(t2,s)^2, singular at s = t2 when H < 1/2.
        const Quad after = double_exponential(
            [&](double s, double sc) {
                const double gap = sc > 0.0 ? sc : t2 - s;
                if (gap <= 0.0) return 0.0;
                const Quad k = kernel_impl(t2, s, gap, hurst);
                after_err = std::max(after_err, product_error(k, k));
                return k.value * k.value;
            },
            t1, t2);

        out.residue = residue.value;
        out.innovation = before.value + after.value;
        out.quadrature_error = residue.error + before.error + after.error +
                               residue_err * std::pow(split, 2.0 - 2.0 * h) / (2.0 - 2.0 * h) +
                               before_err * (t1 - split) + after_err * (t2 - t1);
    }
    out.gap = std::abs(out.total - out.residue - out.innovation);
    out.report = make_bound_report(
        "decomposition_identity",
        "l=" + std::to_string(l) + ";t1=" + format_double(t1) + ";t2=" + format_double(t2) +
            ";H=" + format_double(h),
        tolerance, out.gap);
    return out;
}

}  // namespace polymer
