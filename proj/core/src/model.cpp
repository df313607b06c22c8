#include "gridse/model.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "gridse/linalg.hpp"

namespace gridse {

using nlohmann::json;

namespace {

Matrix matrix_from_json(const json& rows, int expect_rows, int expect_cols,
                        const std::string& field) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != expect_rows) {
    throw ConfigError("model field '" + field + "' must have " +
                      std::to_string(expect_rows) + " rows");
  }
  Matrix m(expect_rows, expect_cols);
  for (int i = 0; i < expect_rows; ++i) {
    const json& row = rows[i];
    if (!row.is_array() || static_cast<int>(row.size()) != expect_cols) {
      throw ConfigError("model field '" + field + "' row " + std::to_string(i) +
                        " must have " + std::to_string(expect_cols) +
                        " entries");
    }
    for (int j = 0; j < expect_cols; ++j) {
      if (!row[j].is_number()) {
        throw ConfigError("model field '" + field + "' contains a non-number");
      }
      m(i, j) = row[j].get<double>();
    }
  }
  return m;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

void require_field(const json& j, const char* name) {
  if (!j.contains(name)) {
    throw ConfigError(std::string("model file missing field '") + name + "'");
  }
}

// Random orthogonal matrix from the QR of a gaussian draw.
Matrix random_orthogonal(int dim, Rng& rng) {
  Matrix g(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) g(i, j) = draw_normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  // Fix the sign convention so the result is reproducible.
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

}  // namespace

SystemModel parse_model(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("model file is not valid JSON: ") + e.what());
  }
  for (const char* f : {"p", "n", "A", "C", "sigma_w2", "sigma_v2", "protected"}) {
    require_field(j, f);
  }
  SystemModel model;
  if (!j["p"].is_number_integer() || j["p"].get<int>() < 1) {
    throw ConfigError("model field 'p' must be a positive integer");
  }
  if (!j["n"].is_number_integer() || j["n"].get<int>() < 1) {
    throw ConfigError("model field 'n' must be a positive integer");
  }
  model.p = j["p"].get<int>();
  model.n = j["n"].get<int>();
  if (model.n <= model.p) {
    throw ConfigError("model field 'n' invalid: n must exceed p");
  }
  model.A = matrix_from_json(j["A"], model.p, model.p, "A");
  model.C = matrix_from_json(j["C"], model.n, model.p, "C");
  model.sigma_w2 = j["sigma_w2"].get<double>();
  model.sigma_v2 = j["sigma_v2"].get<double>();
  if (!(model.sigma_w2 > 0.0)) {
    throw ConfigError("model field 'sigma_w2' must be positive");
  }
  if (!(model.sigma_v2 > 0.0)) {
    throw ConfigError("model field 'sigma_v2' must be positive");
  }
  if (!j["protected"].is_array()) {
    throw ConfigError("model field 'protected' must be an array of indices");
  }
  for (const json& idx : j["protected"]) {
    if (!idx.is_number_integer() || idx.get<int>() < 0 ||
        idx.get<int>() >= model.n) {
      throw ConfigError("model field 'protected' has an out-of-range index");
    }
    model.protected_sensors.push_back(idx.get<int>());
  }
  std::sort(model.protected_sensors.begin(), model.protected_sensors.end());
  if (numerical_rank(model.C) < model.p) {
    throw ConfigError("model field 'C' is rank deficient: C rank < p");
  }
  return model;
}

SystemModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open model file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

std::string model_to_json(const SystemModel& model) {
  json j;
  j["p"] = model.p;
  j["n"] = model.n;
  j["A"] = matrix_to_json(model.A);
  j["C"] = matrix_to_json(model.C);
  j["sigma_w2"] = model.sigma_w2;
  j["sigma_v2"] = model.sigma_v2;
  j["protected"] = model.protected_sensors;
  return j.dump(2);
}

ValidationReport validate_model(const SystemModel& model) {
  ValidationReport report;
  if (model.n <= model.p) {
    report.violations.push_back("n must exceed p");
  }
  if (!(model.sigma_w2 > 0.0)) {
    report.violations.push_back("sigma_w2 must be positive");
  }
  if (!(model.sigma_v2 > 0.0)) {
    report.violations.push_back("sigma_v2 must be positive");
  }
  if (model.A.rows() != model.p || model.A.cols() != model.p) {
    report.violations.push_back("A must be p x p");
  }
  if (model.C.rows() != model.n || model.C.cols() != model.p) {
    report.violations.push_back("C must be n x p");
  }
  for (int idx : model.protected_sensors) {
    if (idx < 0 || idx >= model.n) {
      report.violations.push_back("protected sensor index out of range");
      break;
    }
  }
  if (model.C.rows() == model.n && model.C.cols() == model.p) {
    report.c_rank = numerical_rank(model.C);
    if (report.c_rank < model.p) {
      report.violations.push_back("C rank < p");
    }
  }
  if (model.A.rows() == model.p && model.A.cols() == model.p) {
    const auto eigs = Eigen::EigenSolver<Matrix>(model.A, false).eigenvalues();
    report.spectral_radius = eigs.cwiseAbs().maxCoeff();
    if (report.spectral_radius > 1.0 + 1e-12) {
      report.warnings.push_back("spectral radius of A exceeds 1 (unstable plant)");
    }
  }
  return report;
}

MeasurementFrame measure_state(const SystemModel& model, const SimState& state,
                               Rng& rng) {
  if (state.x.size() != model.p) {
    throw std::invalid_argument("measure_state: state dimension mismatch");
  }
  const double sv = std::sqrt(model.sigma_v2);
  MeasurementFrame frame;
  frame.y_clean = model.C * state.x;
  for (int i = 0; i < model.n; ++i) frame.y_clean(i) += sv * draw_normal(rng);
  frame.y_observed = frame.y_clean;
  frame.k = state.k;
  return frame;
}

std::pair<SimState, MeasurementFrame> simulate_step(const SystemModel& model,
                                                    const SimState& state,
                                                    Rng& rng) {
  if (state.x.size() != model.p) {
    throw std::invalid_argument("simulate_step: state dimension mismatch");
  }
  const double sw = std::sqrt(model.sigma_w2);
  SimState next;
  next.x = model.A * state.x;
  for (int i = 0; i < model.p; ++i) next.x(i) += sw * draw_normal(rng);
  next.k = state.k + 1;
  MeasurementFrame frame = measure_state(model, next, rng);
  return {std::move(next), std::move(frame)};
}

std::pair<Vector, Vector> power_injections(const AdmittanceModel& adm,
                                           const Vector& v,
                                           const Vector& theta) {
  const int b = adm.b;
  if (adm.G.rows() != b || adm.G.cols() != b || adm.B.rows() != b ||
      adm.B.cols() != b || v.size() != b || theta.size() != b) {
    throw std::invalid_argument("power_injections: dimension mismatch");
  }
  Vector p_out = Vector::Zero(b);
  Vector q_out = Vector::Zero(b);
  for (int i = 0; i < b; ++i) {
    double p_sum = 0.0;
    double q_sum = 0.0;
    for (int j = 0; j < b; ++j) {
      const double angle = theta(i) - theta(j);
      const double c = std::cos(angle);
      const double s = std::sin(angle);
      p_sum += v(j) * (adm.G(i, j) * c + adm.B(i, j) * s);
      q_sum += v(j) * (adm.G(i, j) * s - adm.B(i, j) * c);
    }
    p_out(i) = v(i) * p_sum;
    q_out(i) = v(i) * q_sum;
  }
  return {std::move(p_out), std::move(q_out)};
}

SystemModel make_ieee14_surrogate() {
  // 14-bus-scale stand-in for the unpublished reference plant. Structure:
  //  - 35 sensors, 10 states, sensor 34 protected;
  //  - state 9 is a decoupled mode (eigenvalue 0.9) observed only through
  //    the twelve meters below, which gives the accessible-meter set
  //    {0..4,12,14..19,27,32} a one-dimensional stealthy attack subspace;
  //  - the remaining 9x9 block is symmetric with spectral radius exactly 1,
  //    so a window-stacked bypass has a nonempty feasible subspace.
  const int p = 10;
  const int n = 35;
  const IndexSet mode_meters = {0, 1, 2, 3, 4, 12, 14, 15, 16, 17, 18, 19};

  Rng rng = make_rng(0x14b5u, 2024);
  SystemModel model;
  model.p = p;
  model.n = n;
  model.sigma_w2 = 1e-7;
  model.sigma_v2 = 0.1;
  model.protected_sensors = {34};

  model.C = Matrix::Zero(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p - 1; ++j) model.C(i, j) = draw_normal(rng);
  }
  for (int i : mode_meters) {
    model.C(i, p - 1) = 1.0 + 0.3 * std::abs(draw_normal(rng));
  }

  const Matrix q = random_orthogonal(p - 1, rng);
  Vector eigs(p - 1);
  eigs << 1.0, 0.95, 0.92, 0.88, 0.85, 0.80, 0.75, 0.70, 0.65;
  model.A = Matrix::Zero(p, p);
  model.A.topLeftCorner(p - 1, p - 1) = q * eigs.asDiagonal() * q.transpose();
  model.A(p - 1, p - 1) = 0.9;
  return model;
}

SystemModel synthesize_model(int p, int n, std::uint64_t seed) {
  if (p < 2 || n <= p) {
    throw std::invalid_argument("synthesize_model: need p >= 2 and n > p");
  }
  Rng rng = make_rng(seed, 7);
  SystemModel model;
  model.p = p;
  model.n = n;
  model.sigma_w2 = 1e-7;
  model.sigma_v2 = 0.1;

  model.C = Matrix(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) model.C(i, j) = draw_normal(rng);
  }

  const Matrix q = random_orthogonal(p, rng);
  Vector eigs(p);
  for (int i = 0; i < p; ++i) {
    eigs(i) = 0.98 - 0.48 * static_cast<double>(i) / std::max(1, p - 1);
  }
  model.A = q * eigs.asDiagonal() * q.transpose();
  return model;
}

}  // namespace gridse
