/*
 * Copyright 2026 The Synapse Simulator Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SYNAPSE_USL_HPP_
#define SYNAPSE_USL_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "synapse/errors.hpp"

namespace synapse {

/// Coefficients of the capacity model
///   s(X, n) = X / (1 + (n*alpha0 + alpha1)(X - 1)) + (n*beta0 + beta1) X
struct UslParams {
    double alpha0 = 0.0;
    double alpha1 = 0.0;
    double beta0 = 0.0;
    double beta1 = 0.0;

    double contention(double n) const noexcept { return n * alpha0 + alpha1; }
    double coherency(double n) const noexcept { return n * beta0 + beta1; }
    friend bool operator==(const UslParams&, const UslParams&) = default;
};

/// Sustainable throughput at offered load `load` with `pmus` units.
inline double usl_capacity(double load, double pmus, const UslParams& p) {
    if (load < 0.0) throw DomainError("negative offered load");
    const double den = 1.0 + p.contention(pmus) * (load - 1.0);
    if (!(den > 0.0)) throw DomainError("USL denominator is not positive at load " + std::to_string(load));
    return load / den + p.coherency(pmus) * load;
}

struct UslSample {
    double load = 0.0;       ///< offered rate
    double throughput = 0.0; ///< processed rate
    int pmus = 0;
};

/// Least-squares fit of s = X / (1 + a(X-1)) + bX for a single unit count.
/// Residuals are relative to the measured throughput, which suits the
/// multiplicative measurement noise seen on simulated calibration runs.
struct UslCurveFit {
    double a = 0.0;
    double b = 0.0;
    double rss = 0.0;
};

namespace detail {

inline double residual_weight(double y) { return 1.0 / std::max(y * y, 1e-6); }

/// For fixed a the model is linear in b, so b has a closed form and the
/// residual becomes a 1-D profile in a.
inline UslCurveFit usl_profile(const std::vector<double>& x, const std::vector<double>& y, double a) {
    UslCurveFit f{a, 0.0, std::numeric_limits<double>::infinity()};
    double num = 0.0;
    double den = 0.0;
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = 1.0 + a * (x[i] - 1.0);
        if (!(d > 0.0)) return f;
        g[i] = x[i] / d;
        const double w = residual_weight(y[i]);
        num += w * (y[i] - g[i]) * x[i];
        den += w * x[i] * x[i];
    }
    f.b = den > 0.0 ? num / den : 0.0;
    f.rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - g[i] - f.b * x[i];
        f.rss += residual_weight(y[i]) * r * r;
    }
    return f;
}

inline std::pair<double, double> linear_fit(const std::vector<double>& n, const std::vector<double>& v) {
    const double k = static_cast<double>(n.size());
    double sn = 0, sv = 0, snn = 0, snv = 0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        sn += n[i];
        sv += v[i];
        snn += n[i] * n[i];
        snv += n[i] * v[i];
    }
    const double det = k * snn - sn * sn;
    if (std::abs(det) < 1e-12 * std::max(1.0, k * snn)) throw FitError("singular linear fit over unit counts");
    const double slope = (k * snv - sn * sv) / det;
    return {slope, (sv - slope * sn) / k};
}

} // namespace detail

/// Fits one (a, b) curve: a log-spaced grid over a (both signs, plus 0)
/// followed by golden-section refinement inside the best grid bracket.
inline UslCurveFit fit_usl_curve(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> grid{0.0};
    for (int e = -1200; e <= 100; e += 5) {
        const double v = std::pow(10.0, e / 100.0);
        grid.push_back(v);
        grid.push_back(-v);
    }
    std::sort(grid.begin(), grid.end());

    std::size_t best = 0;
    UslCurveFit best_fit = detail::usl_profile(x, y, grid[0]);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const UslCurveFit f = detail::usl_profile(x, y, grid[i]);
        if (f.rss < best_fit.rss) {
            best_fit = f;
            best = i;
        }
    }
    if (!std::isfinite(best_fit.rss)) throw FitError("no feasible USL curve for the samples");

    double lo = grid[best == 0 ? 0 : best - 1];
    double hi = grid[std::min(best + 1, grid.size() - 1)];
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - phi * (hi - lo);
    double d = lo + phi * (hi - lo);
    UslCurveFit fc = detail::usl_profile(x, y, c);
    UslCurveFit fd = detail::usl_profile(x, y, d);
    for (int it = 0; it < 300 && (hi - lo) > 1e-18; ++it) {
        if (fc.rss <= fd.rss) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = detail::usl_profile(x, y, c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = detail::usl_profile(x, y, d);
        }
    }
    for (const auto& f : {fc, fd})
        if (f.rss < best_fit.rss) best_fit = f;
    return best_fit;
}

inline double usl_rss(const std::vector<UslSample>& samples, const UslParams& p) {
    double rss = 0.0;
    for (const auto& s : samples) {
        const double den = 1.0 + p.contention(s.pmus) * (s.load - 1.0);
        if (!(den > 0.0)) return std::numeric_limits<double>::infinity();
        const double r = s.throughput - (s.load / den + p.coherency(s.pmus) * s.load);
        rss += detail::residual_weight(s.throughput) * r * r;
    }
    return rss;
}

/// Offline regression of the four coefficients from (load, throughput, n)
/// samples: a per-n curve fit, a linear fit of the per-n coefficients
/// against n, then a joint coordinate-descent polish of the total residual.
inline UslParams fit_usl(const std::vector<UslSample>& samples) {
    if (samples.size() < 8) throw FitError("USL fit needs at least 8 samples, got " + std::to_string(samples.size()));
    std::map<int, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const auto& s : samples) {
        if (!(s.load >= 0.0) || !std::isfinite(s.throughput)) throw FitError("non-finite sample");
        groups[s.pmus].first.push_back(s.load);
        groups[s.pmus].second.push_back(s.throughput);
    }
    if (groups.size() < 2) throw FitError("USL fit needs at least two distinct unit counts");

    std::vector<double> ns, as, bs;
    for (const auto& [n, xy] : groups) {
        const auto [mn, mx] = std::minmax_element(xy.first.begin(), xy.first.end());
        if (xy.first.size() < 2 || *mn == *mx) throw FitError("no load spread for n=" + std::to_string(n));
        const UslCurveFit f = fit_usl_curve(xy.first, xy.second);
        ns.push_back(n);
        as.push_back(f.a);
        bs.push_back(f.b);
    }
    const auto [alpha0, alpha1] = detail::linear_fit(ns, as);
    const auto [beta0, beta1] = detail::linear_fit(ns, bs);
    UslParams p{alpha0, alpha1, beta0, beta1};

    double rss = usl_rss(samples, p);
    if (!std::isfinite(rss)) throw FitError("fitted USL parameters leave the model domain");
    const double scale = std::max({std::abs(alpha0), std::abs(alpha1), std::abs(beta0), std::abs(beta1), 1e-12});
    double* coords[4] = {&p.alpha0, &p.alpha1, &p.beta0, &p.beta1};
    double step[4];
    for (int j = 0; j < 4; ++j) step[j] = std::max(std::abs(*coords[j]), 1e-3 * scale) * 0.05;
    for (int it = 0; it < 2000; ++it) {
        bool improved = false;
        for (int j = 0; j < 4; ++j) {
            for (double dir : {1.0, -1.0}) {
                const double saved = *coords[j];
                *coords[j] = saved + dir * step[j];
                const double r = usl_rss(samples, p);
                if (r < rss) {
                    rss = r;
                    improved = true;
                    break;
                }
                *coords[j] = saved;
            }
        }
        if (!improved) {
            bool done = true;
            for (double& s : step) {
                s *= 0.5;
                if (s > 1e-15 * scale) done = false;
            }
            if (done) break;
        }
    }
    return p;
}

} // namespace synapse

#endif // SYNAPSE_USL_HPP_
