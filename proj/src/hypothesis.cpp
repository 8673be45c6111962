#include "lsysinfer/hypothesis.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lsysinfer {

using nlohmann::json;

std::size_t HypothesisProblem::p_unknown() const {
  std::size_t c = 0;
  for (auto m : known_mask)
    if (!m) ++c;
  return c;
}

std::vector<std::size_t> HypothesisProblem::unknown_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < known_mask.size(); ++i)
    if (!known_mask[i]) idx.push_back(i);
  return idx;
}

std::vector<std::size_t> HypothesisProblem::known_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < known_mask.size(); ++i)
    if (known_mask[i]) idx.push_back(i);
  return idx;
}

static DenseMatrix take_rows(const DenseMatrix& m, const std::vector<std::size_t>& rows) {
  DenseMatrix out(rows.size(), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t j = 0; j < m.cols(); ++j) out(r, j) = m(rows[r], j);
  return out;
}

DenseMatrix HypothesisProblem::a_unknown() const { return take_rows(a, unknown_indices()); }
DenseMatrix HypothesisProblem::a_known() const { return take_rows(a, known_indices()); }

Vector HypothesisProblem::beta_unknown() const {
  Vector out;
  for (std::size_t i : unknown_indices()) out.push_back(beta_hat[i]);
  return out;
}

Vector HypothesisProblem::beta_known() const {
  Vector out;
  for (std::size_t i : known_indices()) out.push_back(beta_hat[i]);
  return out;
}

DenseMatrix HypothesisProblem::xi_or_identity() const {
  if (xi_hat) return *xi_hat;
  return DenseMatrix::identity(p_unknown());
}

DenseMatrix HypothesisProblem::omega_or_identity() const {
  if (omega_i) return *omega_i;
  return DenseMatrix::identity(p());
}

void HypothesisProblem::validate_shapes() const {
  if (beta_hat.size() != p()) throw std::invalid_argument("problem: beta_hat length != p");
  if (known_mask.size() != p()) throw std::invalid_argument("problem: known_mask length != p");
  if (n < 0) throw std::invalid_argument("problem: negative sample size");
  if (xi_hat && (xi_hat->rows() != p_unknown() || xi_hat->cols() != p_unknown()))
    throw std::invalid_argument("problem: xi_hat dimension != p_u");
  if (omega_i && (omega_i->rows() != p() || omega_i->cols() != p()))
    throw std::invalid_argument("problem: omega_i dimension != p");
}

HypothesisProblem augment_with_counterfactual(const HypothesisProblem& base, const Vector& a_row,
                                              double gamma) {
  if (a_row.size() != base.d())
    throw std::invalid_argument("augment_with_counterfactual: a_row length != d");
  HypothesisProblem out = base;
  out.a.append_row(a_row);
  out.beta_hat.push_back(gamma);
  out.known_mask.push_back(1);
  return out;
}

HypothesisProblem build_conditional_moment_problem(const Vector& g_bar, const DenseMatrix& m_bar,
                                                   long n) {
  const std::size_t p = g_bar.size();
  if (m_bar.rows() != p)
    throw std::invalid_argument("build_conditional_moment_problem: M row count != p");
  const std::size_t dd = m_bar.cols();
  DenseMatrix a(p, 2 * dd + p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < dd; ++j) {
      a(i, j) = m_bar(i, j);
      a(i, dd + j) = -m_bar(i, j);
    }
    a(i, 2 * dd + i) = -1.0;
  }
  HypothesisProblem out;
  out.a = a;
  out.beta_hat = g_bar;
  out.known_mask.assign(p, 0);
  out.n = n;
  return out;
}

std::vector<Diagnostic> validate(const HypothesisProblem& problem) {
  std::vector<Diagnostic> diags;
  problem.validate_shapes();
  const std::size_t rank = matrix_rank(problem.a);
  {
    std::ostringstream os;
    os << "rank(A) = " << rank << " (p = " << problem.p() << ", d = " << problem.d() << ")";
    diags.push_back({"rank", os.str()});
  }
  if (problem.d() >= problem.p() && rank == problem.p())
    diags.push_back({"t_e_degenerate", "A full rank with d >= p: equality statistic identically zero"});
  else
    diags.push_back({"range_test_active", "range condition testable: equality statistic active"});
  if (problem.xi_hat) {
    try {
      psd_sqrt(*problem.xi_hat);
      diags.push_back({"xi_psd", "xi_hat is symmetric PSD"});
    } catch (const std::exception& e) {
      diags.push_back({"xi_not_psd", e.what()});
    }
  }
  return diags;
}

static DenseMatrix matrix_from_json(const json& j) {
  const std::size_t rows = j.size();
  if (rows == 0) return DenseMatrix();
  const std::size_t cols = j.at(0).size();
  DenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j.at(i).size() != cols) throw std::invalid_argument("matrix JSON: ragged rows");
    for (std::size_t k = 0; k < cols; ++k) m(i, k) = j.at(i).at(k).get<double>();
  }
  return m;
}

static json matrix_to_json(const DenseMatrix& m) {
  json j = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    j.push_back(row);
  }
  return j;
}

HypothesisProblem problem_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("problem JSON: parse error: ") + e.what());
  }
  HypothesisProblem p;
  try {
    p.a = matrix_from_json(j.at("A"));
    p.beta_hat = j.at("beta_hat").get<Vector>();
    p.known_mask.clear();
    for (const auto& v : j.at("known_mask")) p.known_mask.push_back(v.get<bool>() ? 1 : 0);
    p.n = j.at("n").get<long>();
    if (j.contains("xi_hat") && !j["xi_hat"].is_null()) p.xi_hat = matrix_from_json(j["xi_hat"]);
    if (j.contains("omega_i") && !j["omega_i"].is_null()) p.omega_i = matrix_from_json(j["omega_i"]);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("problem JSON: ") + e.what());
  }
  p.validate_shapes();
  return p;
}

std::string problem_to_json_text(const HypothesisProblem& problem) {
  json j;
  j["A"] = matrix_to_json(problem.a);
  j["beta_hat"] = problem.beta_hat;
  json mask = json::array();
  for (auto m : problem.known_mask) mask.push_back(static_cast<bool>(m));
  j["known_mask"] = mask;
  j["n"] = problem.n;
  if (problem.xi_hat) j["xi_hat"] = matrix_to_json(*problem.xi_hat);
  if (problem.omega_i) j["omega_i"] = matrix_to_json(*problem.omega_i);
  return j.dump(2);
}

}  // namespace lsysinfer
