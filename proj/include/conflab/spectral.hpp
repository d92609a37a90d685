// Copyright 2026 The conflab Authors. Licensed under the Apache License 2.0.
#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cstdint>
#include <span>
#include <vector>

#include "conflab/conformal.hpp"

namespace conflab {

struct SpectrumOptions {
  int count = 6;               // eigenvalues wanted, constant mode included
  std::uint64_t seed = 1;
  double tol = 1e-8;           // residual relative to a Gershgorin bound of the operator
  int max_iter = 2000;
  int block = 0;               // 0 picks max(2m, m + 8)
  std::size_t direct_limit = 12000;  // vertex count up to which inner solves factorize
  bool keep_vectors = false;
};

struct SpectrumResult {
  std::vector<double> eigenvalues;  // ascending
  std::vector<double> residuals;
  double lambda1 = 0.0;
  int iterations = 0;
  int dim = 0;
  double volume = 0.0;
  Eigen::MatrixXd vectors;  // M-orthonormal eigenfunctions, filled on request
};

// Stiffness sum_e kappa_e (u_a^2 + u_b^2)/2 (f_a - f_b)^2 as a symmetric matrix.
Eigen::SparseMatrix<double> stiffness_matrix(const ConformalField& u);

SpectrumResult laplace_spectrum(const ConformalField& u, const SpectrumOptions& opts);

enum class TraceCompletion { truncated, weyl_tail };
double heat_trace(const SpectrumResult& s, double t, TraceCompletion completion = TraceCompletion::truncated);

double dirichlet_energy(const ConformalField& u, std::span<const double> f);
double rayleigh_quotient(const ConformalField& u, std::span<const double> f);

struct PinchResult {
  double quotient = 0.0;
  double vol_inner = 0.0;
  double vol_outer = 0.0;
  double vol_annulus = 0.0;
  std::vector<double> psi;
};

// Quintic smooth step from 1 at s <= 1/2 to 0 at s >= 2.
double pinch_ramp(double s);

PinchResult pinch_test(const ConformalField& u, VertexId center, double t, double v1, double v2);

struct IsospectralReport {
  std::vector<double> gaps;
  double max_gap = 0.0;
  bool pass = false;
};
IsospectralReport isospectral_compare(const SpectrumResult& a, const SpectrumResult& b, int m, double rel_tol);

}  // namespace conflab
