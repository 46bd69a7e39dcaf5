#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <vector>

namespace srwatch::quadrature {

template <typename Scalar>
struct Result {
  Scalar value{0};
  Scalar error{0};
  int intervals{0};
  bool converged{false};
};

namespace detail {

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (QUADPACK qk15).
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename Scalar>
struct Segment {
  Scalar lo, hi, value, error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

template <typename Scalar, typename F>
Segment<Scalar> gauss_kronrod15(F& f, Scalar lo, Scalar hi) {
  const Scalar center = (lo + hi) / 2;
  const Scalar half = (hi - lo) / 2;
  const Scalar fc = f(center);
  Scalar kronrod = fc * Scalar(kWgk[7]);
  Scalar gauss = fc * Scalar(kWg[3]);
  for (int j = 0; j < 7; ++j) {
    const Scalar dx = half * Scalar(kXgk[j]);
    const Scalar sum = f(center - dx) + f(center + dx);
    kronrod += Scalar(kWgk[j]) * sum;
    if (j % 2 == 1) gauss += Scalar(kWg[j / 2]) * sum;
  }
  return {lo, hi, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integration of f over [lo, hi] (QAG-style:
/// the segment with the largest error estimate is bisected until the summed
/// error drops below max(abs_tol, rel_tol * |integral|)). `breakpoints`
/// strictly inside (lo, hi) seed the initial partition, which helps with
/// kinks and narrow peaks.
template <typename Scalar, typename F>
Result<Scalar> integrate(F&& f, Scalar lo, Scalar hi, Scalar abs_tol, Scalar rel_tol = Scalar(0),
                         std::vector<Scalar> breakpoints = {}, int max_intervals = 4000) {
  std::vector<Scalar> cuts{lo};
  std::sort(breakpoints.begin(), breakpoints.end());
  for (const Scalar b : breakpoints)
    if (b > cuts.back() && b < hi) cuts.push_back(b);
  cuts.push_back(hi);

  std::priority_queue<detail::Segment<Scalar>> heap;
  Scalar total = 0;
  Scalar error = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto seg = detail::gauss_kronrod15(f, cuts[i], cuts[i + 1]);
    total += seg.value;
    error += seg.error;
    heap.push(seg);
  }

  Result<Scalar> result;
  while (static_cast<int>(heap.size()) < max_intervals) {
    if (error <= std::max(abs_tol, rel_tol * std::abs(total))) {
      result.converged = true;
      break;
    }
    const auto worst = heap.top();
    heap.pop();
    const Scalar mid = (worst.lo + worst.hi) / 2;
    const auto left = detail::gauss_kronrod15(f, worst.lo, mid);
    const auto right = detail::gauss_kronrod15(f, mid, worst.hi);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }

  // Re-sum from the segments to shed the drift of the running updates.
  result.value = 0;
  result.error = 0;
  result.intervals = static_cast<int>(heap.size());
  while (!heap.empty()) {
    result.value += heap.top().value;
    result.error += heap.top().error;
    heap.pop();
  }
  if (!result.converged)
    result.converged = result.error <= std::max(abs_tol, rel_tol * std::abs(result.value));
  return result;
}

}  // namespace srwatch::quadrature
