#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "hlearner/data_gen.hpp"
#include "hlearner/text.hpp"

namespace hl {
namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Index rows, Index cols, const std::string& name) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows)
    throw std::invalid_argument("dgp field '" + name + "' must have " + std::to_string(rows) + " rows");
  Eigen::MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw std::invalid_argument("dgp field '" + name + "' must have " + std::to_string(cols) +
                                  " columns");
    for (Index c = 0; c < cols; ++c) {
      const double v = row[static_cast<std::size_t>(c)].get<double>();
      if (!std::isfinite(v)) throw std::invalid_argument("dgp field '" + name + "' is not finite");
      m(r, c) = v;
    }
  }
  return m;
}

}  // namespace

void write_dataset_csv(const Dataset& data, std::ostream& out) {
  std::vector<std::string> header;
  for (Index j = 0; j < data.p(); ++j) header.push_back("x" + std::to_string(j));
  for (Index k = 0; k < data.K(); ++k) header.push_back("t" + std::to_string(k));
  for (Index m = 0; m < data.M(); ++m) header.push_back("y" + std::to_string(m));
  out << join(header, ',') << '\n';
  for (Index i = 0; i < data.N(); ++i) {
    std::vector<std::string> fields;
    for (Index j = 0; j < data.p(); ++j) fields.push_back(format_double(data.X(j, i)));
    for (Index k = 0; k < data.K(); ++k) fields.push_back(format_double(data.T(k, i)));
    for (Index m = 0; m < data.M(); ++m) fields.push_back(format_double(data.Y(m, i)));
    out << join(fields, ',') << '\n';
  }
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ostringstream ss;
  write_dataset_csv(data, ss);
  write_text_file(path, ss.str());
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("dataset file is empty");
  const auto header = split(line, ',');
  Index p = 0, K = 0, M = 0;
  // Columns must appear as x0.., t0.., y0.. in that order.
  for (const auto& name : header) {
    const bool ok = name.size() >= 2 &&
                    ((name[0] == 'x' && K == 0 && M == 0 && name.substr(1) == std::to_string(p)) ||
                     (name[0] == 't' && M == 0 && name.substr(1) == std::to_string(K)) ||
                     (name[0] == 'y' && name.substr(1) == std::to_string(M)));
    if (!ok) throw std::invalid_argument("unexpected dataset column '" + name + "'");
    (name[0] == 'x' ? p : name[0] == 't' ? K : M) += 1;
  }
  if (p == 0 || K == 0 || M == 0)
    throw std::invalid_argument("dataset header needs x, t and y columns");

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != header.size())
      throw std::invalid_argument("dataset row " + std::to_string(rows.size() + 1) + " has " +
                                  std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(header.size()));
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_double(f));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("dataset has no records");

  const Index n = static_cast<Index>(rows.size());
  Dataset data;
  data.X.resize(p, n);
  data.T.resize(K, n);
  data.Y.resize(M, n);
  for (Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (Index j = 0; j < p; ++j) data.X(j, i) = r[static_cast<std::size_t>(j)];
    for (Index k = 0; k < K; ++k) data.T(k, i) = r[static_cast<std::size_t>(p + k)];
    for (Index m = 0; m < M; ++m) data.Y(m, i) = r[static_cast<std::size_t>(p + K + m)];
  }
  std::vector<TreatmentKind> kinds;
  for (Index k = 0; k < K; ++k) {
    const bool binary = (data.T.row(k).array() == 0.0 || data.T.row(k).array() == 1.0).all();
    if (!binary && ((data.T.row(k).array() < 0.0).any() || (data.T.row(k).array() > 1.0).any()))
      throw std::invalid_argument("treatment column t" + std::to_string(k) + " leaves [0, 1]");
    kinds.push_back(binary ? TreatmentKind::Binary : TreatmentKind::Continuous);
  }
  data.spec = TreatmentSpec(std::move(kinds));
  return data;
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  return read_dataset_csv(in);
}

std::string dgp_to_json(const Dgp& dgp) {
  json j;
  j["format"] = "hlearner-dgp";
  j["version"] = 1;
  j["p"] = dgp.p;
  j["treatments"] = dgp.spec.code();
  j["M"] = dgp.M;
  j["gamma"] = dgp.gamma;
  j["sigma_y"] = dgp.sigma_y;
  j["seed"] = dgp.seed;
  j["fingerprint"] = dgp.fingerprint();
  j["propensity_weights"] = matrix_to_json(dgp.propensity_weights);
  j["baseline_weights"] = matrix_to_json(dgp.baseline_weights);
  j["main_effects"] = matrix_to_json(dgp.main_effects);
  j["modifier_weights"] = json::array();
  for (const auto& v : dgp.modifier_weights) j["modifier_weights"].push_back(matrix_to_json(v));
  j["interactions"] = json::array();
  for (const auto& d : dgp.interactions) j["interactions"].push_back(matrix_to_json(d));
  return j.dump(1);
}

Dgp dgp_from_json(std::string_view text) {
  const json j = json::parse(text);
  if (j.value("format", "") != "hlearner-dgp")
    throw std::invalid_argument("not a dgp sidecar document");
  Dgp dgp;
  dgp.p = j.at("p").get<Index>();
  dgp.spec = TreatmentSpec::parse(j.at("treatments").get<std::string>());
  dgp.M = j.at("M").get<Index>();
  dgp.gamma = j.at("gamma").get<double>();
  dgp.sigma_y = j.at("sigma_y").get<double>();
  dgp.seed = j.at("seed").get<std::uint64_t>();
  if (dgp.p < 1 || dgp.M < 1) throw std::invalid_argument("dgp dimensions must be positive");
  const Index K = dgp.K();
  dgp.propensity_weights = matrix_from_json(j.at("propensity_weights"), K, dgp.p, "propensity_weights");
  dgp.baseline_weights = matrix_from_json(j.at("baseline_weights"), dgp.M, dgp.p, "baseline_weights");
  dgp.main_effects = matrix_from_json(j.at("main_effects"), dgp.M, K, "main_effects");
  const json& v = j.at("modifier_weights");
  const json& d = j.at("interactions");
  if (!v.is_array() || !d.is_array() || static_cast<Index>(v.size()) != dgp.M ||
      static_cast<Index>(d.size()) != dgp.M)
    throw std::invalid_argument("dgp needs one modifier and one interaction block per outcome");
  for (Index m = 0; m < dgp.M; ++m) {
    dgp.modifier_weights.push_back(
        matrix_from_json(v[static_cast<std::size_t>(m)], K, dgp.p, "modifier_weights"));
    dgp.interactions.push_back(
        matrix_from_json(d[static_cast<std::size_t>(m)], K, K, "interactions"));
  }
  if (j.contains("fingerprint") && j["fingerprint"].get<std::string>() != dgp.fingerprint())
    throw std::invalid_argument("dgp fingerprint does not match its coefficients");
  return dgp;
}

void write_dgp(const Dgp& dgp, const std::filesystem::path& path) {
  write_text_file(path, dgp_to_json(dgp) + "\n");
}

Dgp read_dgp(const std::filesystem::path& path) { return dgp_from_json(read_text_file(path)); }

}  // namespace hl
