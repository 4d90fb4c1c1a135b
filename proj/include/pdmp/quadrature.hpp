#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace pdmp {

// Gauss-Legendre nodes/weights on [-1,1], computed by Newton iteration on the
// Legendre polynomial (machine precision, deterministic).
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussRule(int n) : nodes(n), weights(n) {
        for (int i = 0; i < n; ++i) {
            double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double p0 = 0, p1 = 0;
            for (int it = 0; it < 100; ++it) {
                p0 = 1.0;
                p1 = x;
                for (int j = 2; j <= n; ++j) {
                    const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                    p0 = p1;
                    p1 = p2;
                }
                const double dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            p0 = 1.0;
            p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            const double dp = n * (x * p1 - p0) / (x * x - 1.0);
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
    }

    static const GaussRule& order24() {
        static const GaussRule rule(24);
        return rule;
    }
};

template <class F>
double integrate_panels(const F& f, double a, double b, int panels, const GaussRule& rule) {
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h;
        const double mid = lo + 0.5 * h;
        double acc = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q)
            acc += rule.weights[q] * f(mid + 0.5 * h * rule.nodes[q]);
        total += 0.5 * h * acc;
    }
    return total;
}

// composite Gauss-Legendre with panel doubling until the change falls below
// tol (absolute); throws if the budget is exhausted without settling
template <class F>
double integrate_adaptive(const F& f, double a, double b, double tol = 1e-12) {
    const GaussRule& rule = GaussRule::order24();
    int panels = 4;
    double prev = integrate_panels(f, a, b, panels, rule);
    for (int it = 0; it < 14; ++it) {
        panels *= 2;
        const double cur = integrate_panels(f, a, b, panels, rule);
        if (std::abs(cur - prev) <= tol) return cur;
        prev = cur;
    }
    throw std::runtime_error("integrate_adaptive: tolerance not reached");
}

}  // namespace pdmp
