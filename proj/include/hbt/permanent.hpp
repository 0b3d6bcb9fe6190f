#pragma once

#include <hbt/error.hpp>

#include <Eigen/Core>

#include <bit>
#include <complex>
#include <vector>

namespace hbt {

/// Matrix permanent by Ryser's inclusion-exclusion formula,
///   perm(A) = (-1)^n sum_{S} (-1)^{|S|} prod_i sum_{j in S} a_ij,
/// walking column subsets in Gray-code order so each step updates the row
/// sums by a single column: O(2^n n).
inline std::complex<double> permanent(const Eigen::MatrixXcd& a) {
    const auto n = a.rows();
    if (a.cols() != n) throw DomainError("correlation", "permanent needs a square matrix");
    if (n < 1 || n > 8) throw DomainError("correlation", "permanent supports 1 <= n <= 8");

    // Extended-precision accumulation: the alternating subset sum cancels
    // heavily whenever the real or imaginary part of the result is small.
    using Wide = std::complex<long double>;
    std::vector<Wide> row_sum(std::size_t(n), 0.0L);
    Wide total = 0.0L;
    unsigned gray = 0;
    for (unsigned step = 1; step < (1u << n); ++step) {
        const unsigned next = step ^ (step >> 1);
        const unsigned changed = gray ^ next;
        const int col = std::countr_zero(changed);
        const long double sign = (next & changed) ? 1.0L : -1.0L;
        for (Eigen::Index i = 0; i < n; ++i) row_sum[std::size_t(i)] += sign * Wide(a(i, col));
        gray = next;

        Wide prod = 1.0L;
        for (const auto& s : row_sum) prod *= s;
        total += (std::popcount(gray) % 2 == 0) ? prod : -prod;
    }
    return std::complex<double>((n % 2 == 0) ? total : -total);
}

}  // namespace hbt
