#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "reflect/errors.hpp"

namespace reflect {

template <typename T>
using Vec2 = Eigen::Matrix<T, 2, 1>;

// Polytropic gas hit by a vertical shock moving toward a wedge, written in
// self-similar coordinates.  rho0 is the quiescent density ahead of the
// incident shock, rho1 the density behind it; u1 is the horizontal speed of
// the shocked gas and xi0 the standing position of the incident shock.
template <typename T>
struct GasSetup {
  T gamma;
  T rho0;
  T rho1;
  T u1;
  T xi0;
};

// Pseudo-potential value and gradient at one point, the arguments every
// pointwise gas relation needs.
template <typename T>
struct PseudoState {
  T potential;
  Vec2<T> grad;
};

// Bernoulli radicands this far below zero are treated as roundoff and
// clamped; anything lower is a genuine vacuum.
inline constexpr double radicand_clamp = 1e-12;

template <typename T>
GasSetup<T> incident_shock(T gamma, T rho0, T rho1) {
  if (!(gamma > T(1)) || !(rho0 > T(0)) || !(rho1 > rho0)) {
    throw DegenerateShock("incident_shock: need gamma > 1 and rho1 > rho0 > 0");
  }
  using std::pow, std::sqrt;
  const T num = T(2) * (pow(rho1, gamma - 1) - pow(rho0, gamma - 1));
  const T u1 = (rho1 - rho0) * sqrt(num / (rho1 * rho1 - rho0 * rho0));
  const T xi0 = rho1 * u1 / (rho1 - rho0);
  return {gamma, rho0, rho1, u1, xi0};
}

// rho = head^{1/(gamma-1)} where head is the Bernoulli radicand.  A tiny
// negative head is clamped to zero (reported through *clamped); a head below
// -radicand_clamp throws VacuumState.
template <typename T>
T density_from_head(T gamma, T head, bool* clamped = nullptr) {
  if (clamped) *clamped = false;
  if (head < T(0)) {
    if (head < -T(radicand_clamp)) {
      throw VacuumState("density: Bernoulli radicand below vacuum clamp");
    }
    head = T(0);
    if (clamped) *clamped = true;
  }
  using std::pow;
  return pow(head, T(1) / (gamma - T(1)));
}

template <typename T>
T bernoulli_head(const GasSetup<T>& gas, const PseudoState<T>& s) {
  using std::pow;
  return pow(gas.rho0, gas.gamma - 1) - s.potential - s.grad.squaredNorm() / 2;
}

template <typename T>
T density(const GasSetup<T>& gas, const PseudoState<T>& s,
          bool* clamped = nullptr) {
  return density_from_head(gas.gamma, bernoulli_head(gas, s), clamped);
}

template <typename T>
T sound_speed_sq(T gamma, T rho) {
  using std::pow;
  return (gamma - 1) * pow(rho, gamma - 1);
}

// Margin of the strict ellipticity criterion |grad|^2 < c_*^2 where c_* is
// the critical speed at this potential level; positive inside the
// pseudo-subsonic region, zero exactly on the sonic circle of a uniform
// state, negative where the equation turns hyperbolic.
template <typename T>
T ellipticity_margin(const GasSetup<T>& gas, const PseudoState<T>& s) {
  using std::pow;
  const T cstar_sq = (T(2) * (gas.gamma - 1) / (gas.gamma + 1)) *
                     (pow(gas.rho0, gas.gamma - 1) - s.potential);
  return cstar_sq - s.grad.squaredNorm();
}

// Mass-flux jump rho_l grad_l . n - rho_r grad_r . n across a discontinuity
// with unit normal n; antisymmetric under swapping the two sides.
template <typename T>
T rh_residual(const GasSetup<T>& gas, const PseudoState<T>& left,
              const PseudoState<T>& right, const Vec2<T>& normal) {
  return density(gas, left) * left.grad.dot(normal) -
         density(gas, right) * right.grad.dot(normal);
}

// Admissibility: density must increase across the shock in the direction the
// pseudo-flow crosses it.
template <typename T>
bool entropy_check(T rho_upstream, T rho_downstream) {
  return rho_downstream > rho_upstream;
}

}  // namespace reflect
