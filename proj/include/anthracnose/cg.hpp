// Copyright 2026 The Anthracnose Control Authors
//
//    Licensed under the Apache License, Version 2.0 (the "License");
//    you may not use this file except in compliance with the License.
//    You may obtain a copy of the License at
//
//        http://www.apache.org/licenses/LICENSE-2.0
//
//    Unless required by applicable law or agreed to in writing, software
//    distributed under the License is distributed on an "AS IS" BASIS,
//    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//    See the License for the specific language governing permissions and
//    limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace anthracnose {

struct CgResult {
    std::size_t iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace detail

/// Matrix-free conjugate gradient for a symmetric positive definite operator.
/// `apply(in, out)` writes A*in into out. `x` holds the initial guess on entry
/// and the solution on exit. Reductions run in index order, so results do not
/// depend on scheduling.
template <class Apply>
CgResult conjugate_gradient(Apply&& apply, std::span<const double> b, std::span<double> x,
                            double rel_tol, std::size_t max_iter) {
    const std::size_t n = b.size();
    CgResult result;
    const double b_norm = std::sqrt(detail::dot(b, b));
    if (b_norm == 0.0) {
        for (auto& v : x) v = 0.0;
        result.converged = true;
        return result;
    }

    std::vector<double> r(n), p(n), ap(n);
    apply(std::span<const double>(x.data(), n), std::span<double>(ap));
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
    double rr = detail::dot(r, r);
    result.relative_residual = std::sqrt(rr) / b_norm;
    if (result.relative_residual <= rel_tol) {
        result.converged = true;
        return result;
    }
    p = r;

    for (std::size_t it = 1; it <= max_iter; ++it) {
        apply(std::span<const double>(p), std::span<double>(ap));
        const double pap = detail::dot(p, ap);
        if (!(pap > 0.0)) break;  // operator not SPD along p
        const double step = rr / pap;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        const double rr_next = detail::dot(r, r);
        result.iterations = it;
        result.relative_residual = std::sqrt(rr_next) / b_norm;
        if (result.relative_residual <= rel_tol) {
            result.converged = true;
            return result;
        }
        const double beta = rr_next / rr;
        rr = rr_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
    return result;
}

}  // namespace anthracnose
