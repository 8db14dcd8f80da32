#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace ousv {

/// Nelder-Mead downhill simplex minimizer, derivative-free.
struct NelderMeadConfig {
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
    double tol = 1e-8;
    int max_iter = 2000;
    /// Relative perturbation used to build the initial simplex around x0.
    double initial_step = 0.1;
};

struct NelderMeadResult {
    std::vector<double> best;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

inline NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                                    std::span<const double> x0,
                                    const NelderMeadConfig& cfg = {}) {
    const std::size_t n = x0.size();
    if (n < 1) throw std::invalid_argument("nelder_mead: dimension must be >= 1");

    std::vector<std::vector<double>> verts(n + 1, std::vector<double>(x0.begin(), x0.end()));
    for (std::size_t i = 0; i < n; ++i) {
        double step = cfg.initial_step * std::fabs(x0[i]);
        if (step == 0.0) step = cfg.initial_step;
        verts[i + 1][i] += step;
    }
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fv[i] = f(verts[i]);

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n);
    NelderMeadResult out;

    auto simplex_size = [&]() {
        // Mean distance of the vertices from their centroid.
        std::vector<double> center(n, 0.0);
        for (const auto& v : verts)
            for (std::size_t i = 0; i < n; ++i) center[i] += v[i] / (n + 1);
        double size = 0.0;
        for (const auto& v : verts) {
            double d2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) d2 += (v[i] - center[i]) * (v[i] - center[i]);
            size += std::sqrt(d2);
        }
        return size / (n + 1);
    };

    for (out.iterations = 0; out.iterations < cfg.max_iter; ++out.iterations) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = order[0], worst = order[n], second_worst = order[n - 1];

        if (simplex_size() < cfg.tol) {
            out.converged = true;
            break;
        }

        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k <= n; ++k)
                if (k != worst) s += verts[k][i];
            centroid[i] = s / n;
        }

        auto blend = [&](double coef) {
            for (std::size_t i = 0; i < n; ++i)
                trial[i] = centroid[i] + coef * (centroid[i] - verts[worst][i]);
        };

        blend(cfg.reflection);
        const double f_reflect = f(trial);
        if (f_reflect < fv[order[0]]) {
            std::vector<double> reflected = trial;
            blend(cfg.expansion);
            const double f_expand = f(trial);
            if (f_expand < f_reflect) {
                verts[worst] = trial;
                fv[worst] = f_expand;
            } else {
                verts[worst] = reflected;
                fv[worst] = f_reflect;
            }
            continue;
        }
        if (f_reflect < fv[second_worst]) {
            verts[worst] = trial;
            fv[worst] = f_reflect;
            continue;
        }
        blend(f_reflect < fv[worst] ? cfg.contraction : -cfg.contraction);
        const double f_contract = f(trial);
        if (f_contract < std::min(f_reflect, fv[worst])) {
            verts[worst] = trial;
            fv[worst] = f_contract;
            continue;
        }
        for (std::size_t k = 0; k <= n; ++k) {
            if (k == best) continue;
            for (std::size_t i = 0; i < n; ++i)
                verts[k][i] = verts[best][i] + cfg.shrink * (verts[k][i] - verts[best][i]);
            fv[k] = f(verts[k]);
        }
    }

    const std::size_t best =
        std::min_element(fv.begin(), fv.end()) - fv.begin();
    out.best = verts[best];
    out.value = fv[best];
    return out;
}

} // namespace ousv
