// Copyright 2026 The kqpd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

#include "kqpd/phase_space.hpp"

using namespace kqpd;

namespace {

constexpr double kPi = std::numbers::pi;

const Axis kGrid = Wavefunction1D::default_axis(256, 10.0);

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::NumericalFailure;
}

// Second central moments of a grid distribution.
std::pair<double, double> variances(const PhaseSpaceGrid& g) {
  double mx = 0, mp = 0, xx = 0, pp = 0;
  for (Eigen::Index i = 0; i < g.x.count; ++i)
    for (Eigen::Index j = 0; j < g.p.count; ++j) {
      const double w = g.values(i, j) * g.cell();
      mx += w * g.x.at(i);
      mp += w * g.p.at(j);
      xx += w * g.x.at(i) * g.x.at(i);
      pp += w * g.p.at(j) * g.p.at(j);
    }
  return {xx - mx * mx, pp - mp * mp};
}

}  // namespace

TEST(Wigner, GroundStateGaussian) {
  const auto w = wigner(Wavefunction1D::gaussian(kGrid));
  double worst = 0.0;
  for (Eigen::Index i = 0; i < w.x.count; ++i)
    for (Eigen::Index j = 0; j < w.p.count; ++j) {
      const double x = w.x.at(i), p = w.p.at(j);
      worst = std::max(worst, std::abs(w.values(i, j) - std::exp(-x * x - p * p) / kPi));
    }
  EXPECT_LT(worst, 1e-6);
  EXPECT_NEAR(w.integral(), 1.0, 1e-10);
}

TEST(Wigner, MomentumAxisSpacing) {
  const auto w = wigner(Wavefunction1D::gaussian(kGrid));
  EXPECT_NEAR(w.p.spacing, kPi / (256 * kGrid.spacing), 1e-15);
  EXPECT_NEAR(w.p.at(128), 0.0, 1e-12);
}

TEST(Wigner, OddCatIsNegativeAtOrigin) {
  const auto w = wigner(Wavefunction1D::cat(kGrid, 2.0, -1.0));
  EXPECT_NEAR(w.at(0.0, 0.0), -1.0 / kPi, 1e-4);
  EXPECT_GT(negativity_volume(w), 0.1);
  // Even cat is positive there.
  EXPECT_NEAR(wigner(Wavefunction1D::cat(kGrid, 2.0, 1.0)).at(0.0, 0.0), 1.0 / kPi, 1e-4);
}

TEST(Wigner, MarginalsArePositionAndMomentumDensities) {
  const auto psi = Wavefunction1D::cat(kGrid, 2.0, std::complex<double>(0.3, 0.8));
  const auto w = wigner(psi);
  const Eigen::VectorXd xm = w.x_marginal();
  EXPECT_LT((xm - psi.amplitudes().cwiseAbs2()).cwiseAbs().maxCoeff(), 1e-6);
  const Eigen::VectorXd pm = w.p_marginal();
  EXPECT_LT((pm - momentum_density(psi, w.p)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Wigner, RejectsOddSampleCount) {
  const Axis odd{-10.0, 20.0 / 255.0, 255};
  EXPECT_EQ(code_of([&] { wigner(Wavefunction1D::gaussian(odd)); }), ErrorCode::InvalidArgument);
}

TEST(Husimi, NonnegativeForCat) {
  const auto w = wigner(Wavefunction1D::cat(kGrid, 2.0, -1.0));
  const auto q = husimi(w, 1.0 / std::numbers::sqrt2);
  EXPECT_GE(q.values.minCoeff(), -1e-9);
  EXPECT_NEAR(q.integral(), 1.0, 1e-8);
}

TEST(Husimi, SimultaneousMeasurementRoute) {
  const auto w = wigner(Wavefunction1D::cat(kGrid, 2.0, -1.0));
  for (double sigma : {0.5, 1.0 / std::numbers::sqrt2, 0.9}) {
    const auto [dx, dp] = husimi_detectors(sigma);
    EXPECT_NEAR(dx.sigma_imp * dx.sigma_ba, 0.5, 1e-14);
    EXPECT_NEAR(dp.sigma_imp * dp.sigma_ba, 0.5, 1e-14);
    const auto a = simultaneous_xp(w, dx, dp);
    const auto b = husimi(w, sigma);
    EXPECT_LT((a.values - b.values).cwiseAbs().maxCoeff(), 1e-8) << "sigma=" << sigma;
  }
}

TEST(Sequential, VariancesAddBackAction) {
  const auto w = wigner(Wavefunction1D::gaussian(kGrid));
  const auto dx = GaussianDetector::minimal(0.4);
  const auto dp = GaussianDetector::minimal(0.8);
  const auto xp = sequential_xp(w, dx, dp, MeasurementOrder::XThenP);
  const auto [vx, vp] = variances(xp);
  EXPECT_NEAR(vx, 0.5 + 0.16, 1e-8);
  EXPECT_NEAR(vp, 0.5 + 0.64 + dx.sigma_ba * dx.sigma_ba, 1e-8);
  const auto px = sequential_xp(w, dx, dp, MeasurementOrder::PThenX);
  const auto [ux, up] = variances(px);
  EXPECT_NEAR(ux, 0.5 + 0.16 + dp.sigma_ba * dp.sigma_ba, 1e-8);
  EXPECT_NEAR(up, 0.5 + 0.64, 1e-8);
}

TEST(Smoothing, MassLeavingTheGridIsReported) {
  const auto w = wigner(Wavefunction1D::gaussian(kGrid, 8.5));
  EXPECT_EQ(code_of([&] { husimi(w, 1.0); }), ErrorCode::GridTooCoarse);
  const auto fast = wigner(Wavefunction1D::gaussian(kGrid, 0.0, 1.0, 18.0));
  EXPECT_EQ(code_of([&] { husimi(fast, 1.0); }), ErrorCode::GridTooCoarse);
}

TEST(Wavefunction, NormalizationChecked) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Ones(8);
  EXPECT_EQ(code_of([&] { Wavefunction1D(0.0, 1.0, v); }), ErrorCode::InvalidArgument);
  EXPECT_NO_THROW(Wavefunction1D(0.0, 1.0, v / std::sqrt(8.0)));
}

TEST(GridIO, BinaryRoundTrip) {
  const auto w = wigner(Wavefunction1D::cat(kGrid, 1.5, -1.0));
  std::stringstream buf;
  write_grid_binary(w, buf);
  const auto back = read_grid_binary(buf);
  EXPECT_EQ(back.x.origin, w.x.origin);
  EXPECT_EQ(back.p.spacing, w.p.spacing);
  EXPECT_EQ(back.x.count, w.x.count);
  EXPECT_EQ(back.values, w.values);
  std::stringstream bad("not a grid");
  EXPECT_THROW(read_grid_binary(bad), Error);
}

TEST(GridIO, CsvHasOneRowPerCell) {
  const Axis small = Wavefunction1D::default_axis(16, 6.0);
  const auto w = wigner(Wavefunction1D::gaussian(small));
  std::stringstream out;
  write_grid_csv(w, out);
  int lines = 0;
  for (std::string line; std::getline(out, line);) ++lines;
  EXPECT_EQ(lines, 1 + 16 * 16);
}
