#include <cmath>

#include "sbi/common.hpp"
#include "sbi/lgssm.hpp"

namespace sbi {

namespace {

constexpr double kLn2Pi = 1.8378770664093454835606594728112;

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: inner dims " + a.shape_str() + " x " + b.shape_str());
  Tensor out = Tensor::zeros({a.rows(), b.cols()});
  for (std::int64_t i = 0; i < a.rows(); ++i)
    for (std::int64_t k = 0; k < a.cols(); ++k) {
      const double av = a.at(i, k);
      if (av == 0.0) continue;
      for (std::int64_t j = 0; j < b.cols(); ++j) out.at(i, j) += av * b.at(k, j);
    }
  return out;
}

Tensor transpose(const Tensor& a) {
  Tensor out = Tensor::zeros({a.cols(), a.rows()});
  for (std::int64_t i = 0; i < a.rows(); ++i)
    for (std::int64_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += b.v[i];
  return out;
}

// Lower Cholesky; tolerates exact zero rows (semidefinite input). Throws on
// an indefinite pivot.
Tensor cholesky_psd(const Tensor& a, const std::string& where) {
  const std::int64_t n = a.rows();
  Tensor L = Tensor::zeros({n, n});
  double scale = 1e-300;
  for (std::int64_t i = 0; i < n; ++i) scale = std::max(scale, std::fabs(a.at(i, i)));
  for (std::int64_t j = 0; j < n; ++j) {
    double d = a.at(j, j);
    for (std::int64_t k = 0; k < j; ++k) d -= L.at(j, k) * L.at(j, k);
    if (d < -1e-10 * scale) throw NumericError(where + ": matrix is not positive semidefinite");
    if (d <= 0.0) {
      // zero pivot: the column must vanish too
      continue;
    }
    L.at(j, j) = std::sqrt(d);
    for (std::int64_t i = j + 1; i < n; ++i) {
      double s = a.at(i, j);
      for (std::int64_t k = 0; k < j; ++k) s -= L.at(i, k) * L.at(j, k);
      L.at(i, j) = s / L.at(j, j);
    }
  }
  return L;
}

// Strictly positive definite Cholesky for innovation covariances.
Tensor cholesky_pd(const Tensor& a, const std::string& where) {
  const std::int64_t n = a.rows();
  Tensor L = Tensor::zeros({n, n});
  for (std::int64_t j = 0; j < n; ++j) {
    double d = a.at(j, j);
    for (std::int64_t k = 0; k < j; ++k) d -= L.at(j, k) * L.at(j, k);
    if (!(d > 0.0)) throw NumericError(where + ": covariance not positive definite");
    L.at(j, j) = std::sqrt(d);
    for (std::int64_t i = j + 1; i < n; ++i) {
      double s = a.at(i, j);
      for (std::int64_t k = 0; k < j; ++k) s -= L.at(i, k) * L.at(j, k);
      L.at(i, j) = s / L.at(j, j);
    }
  }
  return L;
}

// Solves L L^T x = b in place of returning; b is a vector.
std::vector<double> chol_solve(const Tensor& L, std::vector<double> b) {
  const std::int64_t n = L.rows();
  for (std::int64_t i = 0; i < n; ++i) {
    double s = b[static_cast<std::size_t>(i)];
    for (std::int64_t k = 0; k < i; ++k) s -= L.at(i, k) * b[static_cast<std::size_t>(k)];
    b[static_cast<std::size_t>(i)] = s / L.at(i, i);
  }
  for (std::int64_t i = n - 1; i >= 0; --i) {
    double s = b[static_cast<std::size_t>(i)];
    for (std::int64_t k = i + 1; k < n; ++k) s -= L.at(k, i) * b[static_cast<std::size_t>(k)];
    b[static_cast<std::size_t>(i)] = s / L.at(i, i);
  }
  return b;
}

Tensor chol_solve_mat(const Tensor& L, const Tensor& B) {
  Tensor out = Tensor::zeros({B.rows(), B.cols()});
  for (std::int64_t j = 0; j < B.cols(); ++j) {
    std::vector<double> col(static_cast<std::size_t>(B.rows()));
    for (std::int64_t i = 0; i < B.rows(); ++i) col[static_cast<std::size_t>(i)] = B.at(i, j);
    col = chol_solve(L, std::move(col));
    for (std::int64_t i = 0; i < B.rows(); ++i) out.at(i, j) = col[static_cast<std::size_t>(i)];
  }
  return out;
}

void check_symmetric(const Tensor& a, const std::string& name) {
  for (std::int64_t i = 0; i < a.rows(); ++i)
    for (std::int64_t j = 0; j < a.cols(); ++j)
      if (std::fabs(a.at(i, j) - a.at(j, i)) > 1e-9 * (1.0 + std::fabs(a.at(i, j))))
        throw ContractViolation("LinearGaussianSSM: " + name + " is not symmetric");
}

}  // namespace

void LinearGaussianSSM::validate() const {
  const std::int64_t S = A.rows(), V = C.rows();
  if (A.cols() != S || Q.rows() != S || Q.cols() != S || C.cols() != S || R.rows() != V || R.cols() != V ||
      static_cast<std::int64_t>(mu0.size()) != S || Sigma0.rows() != S || Sigma0.cols() != S)
    throw DimensionError("LinearGaussianSSM: inconsistent dimensions");
  check_symmetric(Q, "Q");
  check_symmetric(R, "R");
  check_symmetric(Sigma0, "Sigma0");
}

LinearGaussianSSM LinearGaussianSSM::scalar(double a, double c, double q, double r, double m0, double s0) {
  LinearGaussianSSM m;
  m.A = Tensor::from({1, 1}, {a});
  m.C = Tensor::from({1, 1}, {c});
  m.Q = Tensor::from({1, 1}, {q});
  m.R = Tensor::from({1, 1}, {r});
  m.mu0 = {m0};
  m.Sigma0 = Tensor::from({1, 1}, {s0});
  return m;
}

double kalman_loglik(const LinearGaussianSSM& ssm, const SeriesPanel& panel) {
  ssm.validate();
  const std::int64_t S = ssm.state_dim(), V = ssm.obs_dim();
  if (panel.V != V) throw DimensionError("kalman_loglik: panel has " + std::to_string(panel.V) + " variables, C has " +
                                         std::to_string(V) + " rows");
  std::vector<double> x = ssm.mu0;
  Tensor P = ssm.Sigma0;
  const Tensor Ct = transpose(ssm.C);
  double ll = 0.0;
  for (std::int64_t t = 0; t < panel.T; ++t) {
    if (t > 0) {
      // predict
      std::vector<double> xn(static_cast<std::size_t>(S), 0.0);
      for (std::int64_t i = 0; i < S; ++i)
        for (std::int64_t k = 0; k < S; ++k) xn[static_cast<std::size_t>(i)] += ssm.A.at(i, k) * x[static_cast<std::size_t>(k)];
      x = std::move(xn);
      P = add(matmul(matmul(ssm.A, P), transpose(ssm.A)), ssm.Q);
    }
    // innovation
    const Tensor PCt = matmul(P, Ct);
    Tensor Sm = add(matmul(ssm.C, PCt), ssm.R);
    std::vector<double> e(static_cast<std::size_t>(V));
    for (std::int64_t i = 0; i < V; ++i) {
      double yhat = 0.0;
      for (std::int64_t k = 0; k < S; ++k) yhat += ssm.C.at(i, k) * x[static_cast<std::size_t>(k)];
      e[static_cast<std::size_t>(i)] = panel.values.at(t, i) - yhat;
    }
    const Tensor L = cholesky_pd(Sm, "kalman innovation");
    double logdet = 0.0;
    for (std::int64_t i = 0; i < V; ++i) logdet += 2.0 * std::log(L.at(i, i));
    const std::vector<double> Sinv_e = chol_solve(L, e);
    double quad = 0.0;
    for (std::int64_t i = 0; i < V; ++i) quad += e[static_cast<std::size_t>(i)] * Sinv_e[static_cast<std::size_t>(i)];
    ll += -0.5 * (static_cast<double>(V) * kLn2Pi + logdet + quad);

    // gain and Joseph update
    const Tensor K = transpose(chol_solve_mat(L, transpose(PCt)));  // P C^T S^-1
    for (std::int64_t i = 0; i < S; ++i) {
      double upd = 0.0;
      for (std::int64_t k = 0; k < V; ++k) upd += K.at(i, k) * e[static_cast<std::size_t>(k)];
      x[static_cast<std::size_t>(i)] += upd;
    }
    Tensor IKC = Tensor::zeros({S, S});
    for (std::int64_t i = 0; i < S; ++i) IKC.at(i, i) = 1.0;
    const Tensor KC = matmul(K, ssm.C);
    for (std::size_t i = 0; i < IKC.v.size(); ++i) IKC.v[i] -= KC.v[i];
    P = add(matmul(matmul(IKC, P), transpose(IKC)), matmul(matmul(K, ssm.R), transpose(K)));
  }
  return ll;
}

SeriesPanel simulate_lgssm(const LinearGaussianSSM& ssm, std::int64_t T, std::uint64_t seed) {
  ssm.validate();
  if (T < 1) throw ContractViolation("simulate_lgssm: T must be positive");
  const std::int64_t S = ssm.state_dim(), V = ssm.obs_dim();
  const Tensor Lq = cholesky_psd(ssm.Q, "Q");
  const Tensor Lr = cholesky_psd(ssm.R, "R");
  const Tensor L0 = cholesky_psd(ssm.Sigma0, "Sigma0");
  RngStream rng(seed);
  SeriesPanel panel = SeriesPanel::make(T, V);
  std::vector<double> x = ssm.mu0;
  auto add_noise = [&](std::vector<double>& target, const Tensor& L) {
    std::vector<double> eps(static_cast<std::size_t>(L.rows()));
    for (auto& e : eps) e = rng.gaussian();
    for (std::int64_t i = 0; i < L.rows(); ++i)
      for (std::int64_t k = 0; k <= i; ++k) target[static_cast<std::size_t>(i)] += L.at(i, k) * eps[static_cast<std::size_t>(k)];
  };
  add_noise(x, L0);
  for (std::int64_t t = 0; t < T; ++t) {
    if (t > 0) {
      std::vector<double> xn(static_cast<std::size_t>(S), 0.0);
      for (std::int64_t i = 0; i < S; ++i)
        for (std::int64_t k = 0; k < S; ++k) xn[static_cast<std::size_t>(i)] += ssm.A.at(i, k) * x[static_cast<std::size_t>(k)];
      add_noise(xn, Lq);
      x = std::move(xn);
    }
    std::vector<double> y(static_cast<std::size_t>(V), 0.0);
    for (std::int64_t i = 0; i < V; ++i)
      for (std::int64_t k = 0; k < S; ++k) y[static_cast<std::size_t>(i)] += ssm.C.at(i, k) * x[static_cast<std::size_t>(k)];
    add_noise(y, Lr);
    for (std::int64_t i = 0; i < V; ++i) panel.values.at(t, i) = y[static_cast<std::size_t>(i)];
  }
  return panel;
}

}  // namespace sbi
