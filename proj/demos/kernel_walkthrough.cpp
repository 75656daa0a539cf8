// Builds the kernel that maps P = 0 to Q = 1, pushes a heat solution through
// it and shows that the transformed field keeps the left value trace while
// solving the Q-equation up to a boundary source.

#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

#include "transop/evolution.hpp"
#include "transop/goursat.hpp"
#include "transop/transform.hpp"

int main() {
  using namespace transop;
  const auto [xm, tm] = make_meshes(1.0, 129, 0.5, 129);
  const auto P = PotentialField::zero(1, xm);
  const auto Q = PotentialField::from_function(1, xm, [](double) { return cplx(1.0); });

  const auto K = solve_goursat(P, Q);
  std::printf("kernel: %zu sweeps, K(1,1) = %.10f (closed form 0.5)\n", K.iterations, K(xm.size() - 1, xm.size() - 1).real());

  std::vector<cplx> u0(xm.size());
  for (std::size_t i = 0; i < xm.size(); ++i) u0[i] = 1.0 + 0.5 * std::cos(std::numbers::pi * xm.node(i));
  const auto u = solve_forward(1.0, P, std::nullopt, u0, {}, tm);
  const auto v = apply_kernel(K, u);

  const auto tu = extract_traces(u), tv = extract_traces(v);
  std::printf("sup |v(t,0) - u(t,0)| = %.3e\n", max_abs_diff(tu.left_value, tv.left_value));
  std::printf("Q-equation residual of v = %.3e\n", lemma2_residual(1.0, Q, K, u));
  for (std::size_t j = 0; j < tm.size(); j += 32)
    std::printf("t = %.4f  u(t,0) = %.8f  v(t,1) = %.8f\n", tm.node(j), tu.left_value[j].real(), v(j, xm.size() - 1).real());
  return 0;
}
