#include "ponly/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ponly/errors.hpp"

namespace ponly {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

const char* tool_version() { return PONLY_VERSION; }

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvError::CsvError(std::size_t line, const std::string& what)
    : InvalidArgument("line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line, const std::string& what) {
  if (s.empty()) throw CsvError(line, "empty " + what);
  std::size_t used = 0;
  double v;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw CsvError(line, "cannot parse " + what + " '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v)) {
    throw CsvError(line, "cannot parse " + what + " '" + s + "'");
  }
  return v;
}

bool is_skippable(const std::string& line) {
  const auto b = line.find_first_not_of(" \t\r");
  return b == std::string::npos || line[b] == '#';
}

}  // namespace

Dataset read_dataset_csv(std::istream& in, double domain_area) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_skippable(line)) continue;
    header = split_csv(line);
    break;
  }
  if (header.empty()) throw CsvError(lineno, "missing header row");
  if (header[0] != "y") throw CsvError(lineno, "first column must be 'y'");
  const bool has_w = header.size() > 1 && header[1] == "w";
  const std::size_t first_x = has_w ? 2 : 1;
  const std::size_t p = header.size() - first_x;
  if (p == 0) throw CsvError(lineno, "no feature columns");
  for (std::size_t k = 0; k < p; ++k) {
    if (header[first_x + k] != "x" + std::to_string(k + 1)) {
      throw CsvError(lineno, "expected column 'x" + std::to_string(k + 1) + "'");
    }
  }

  std::vector<std::vector<double>> pres, bg;
  std::vector<double> weights;
  std::size_t with_w = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_skippable(line)) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw CsvError(lineno, "expected " + std::to_string(header.size()) +
                                 " fields, found " + std::to_string(fields.size()));
    }
    const double y = parse_number(fields[0], lineno, "label");
    if (y != 0.0 && y != 1.0) throw CsvError(lineno, "label must be 0 or 1");
    std::vector<double> x(p);
    for (std::size_t k = 0; k < p; ++k) {
      x[k] = parse_number(fields[first_x + k], lineno, "feature x" + std::to_string(k + 1));
    }
    if (y == 1.0) {
      if (has_w && !fields[1].empty() && parse_number(fields[1], lineno, "weight") != 0.0) {
        throw CsvError(lineno, "presence rows must have an empty or zero weight");
      }
      pres.push_back(std::move(x));
    } else {
      if (has_w && !fields[1].empty()) {
        const double w = parse_number(fields[1], lineno, "weight");
        if (!(w > 0.0)) throw CsvError(lineno, "background weight must be positive");
        weights.push_back(w);
        ++with_w;
      } else {
        weights.push_back(0.0);
      }
      bg.push_back(std::move(x));
    }
  }
  if (pres.empty()) throw CsvError(lineno, "no presence rows (y=1)");
  if (bg.empty()) throw CsvError(lineno, "no background rows (y=0)");
  if (with_w != 0 && with_w != bg.size()) {
    throw CsvError(lineno, "weights must be given for all background rows or none");
  }

  auto to_matrix = [p](const std::vector<std::vector<double>>& rows) {
    MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(p));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t k = 0; k < p; ++k) {
        m(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
      }
    }
    return m;
  };
  std::optional<VectorXd> w;
  if (with_w) w = Eigen::Map<const VectorXd>(weights.data(), static_cast<Index>(weights.size()));
  return Dataset(to_matrix(pres), to_matrix(bg), domain_area, std::move(w));
}

Dataset read_dataset_csv_file(const std::string& path, double domain_area) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  return read_dataset_csv(in, domain_area);
}

void write_dataset_csv(std::ostream& out, const Dataset& data,
                       const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  const bool with_w = data.has_explicit_weights();
  out << "y";
  if (with_w) out << ",w";
  for (Index k = 0; k < data.p(); ++k) out << ",x" << (k + 1);
  out << '\n';
  for (Index i = 0; i < data.rows(); ++i) {
    const bool presence = i < data.n1();
    out << (presence ? 1 : 0);
    if (with_w) {
      out << ',';
      if (!presence) out << format_double(data.weights()(i - data.n1()));
    }
    for (Index k = 0; k < data.p(); ++k) out << ',' << format_double(data.features()(i, k));
    out << '\n';
  }
}

// ---------------------------------------------------------------- JSON

namespace {

json vector_json(const VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

VectorXd vector_from_json(const json& j) {
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j.at(i).get<double>();
  return v;
}

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

json to_json(const Penalty& penalty) {
  json j{{"kind", to_string(penalty.kind)}, {"lambda", penalty.lambda}, {"mix", penalty.mix}};
  if (penalty.weights.size()) j["weights"] = vector_json(penalty.weights);
  return j;
}

Penalty penalty_from_json(const json& j) {
  Penalty p;
  p.kind = penalty_kind_from_string(j.value("kind", std::string("none")));
  p.lambda = j.value("lambda", 0.0);
  p.mix = j.value("mix", p.kind == Penalty::Kind::l2 ? 0.0 : 1.0);
  if (j.contains("weights")) p.weights = vector_from_json(j.at("weights"));
  return p;
}

json to_json(const ModelFit& fit) {
  json j;
  j["model"] = to_string(fit.model);
  j["alpha"] = optional_json(fit.alpha);
  j["eta"] = optional_json(fit.eta);
  j["beta"] = vector_json(fit.beta);
  j["W"] = optional_json(fit.W);
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["grad_norm"] = fit.grad_norm;
  j["n1"] = fit.n1;
  j["n0"] = fit.n0;
  j["domain_area"] = fit.domain_area;
  j["seed"] = optional_json(fit.seed);
  j["penalty"] = to_json(fit.penalty);
  if (fit.model == ModelKind::iwlr || fit.model == ModelKind::logistic) {
    j["max_fitted"] = fit.max_fitted;
  }
  if (fit.model == ModelKind::iwlr) {
    j["escalation_rounds"] = fit.escalation_rounds;
    j["stability_refits"] = fit.stability_refits;
    j["last_W_change"] = fit.last_W_change;
  }
  return j;
}

json to_json(const EquivalenceReport& r) {
  json j{{"check", r.check},
         {"max_abs_diff", r.max_abs_diff},
         {"tolerance", r.tolerance},
         {"pass", r.pass},
         {"penalty", r.penalty},
         {"dataset_seed", optional_json(r.dataset_seed)}};
  json d = json::object();
  for (const auto& [k, v] : r.details) d[k] = v;
  j["details"] = d;
  return j;
}

json to_json(const SweepConfig& c) {
  json est = json::array();
  for (auto e : c.estimators) est.push_back(to_string(e));
  json spec{{"proportions", c.spec.proportions},
            {"slopes", c.spec.slopes},
            {"variant", to_string(c.spec.variant)}};
  return json{{"n1", c.n1},
              {"n0_grid", c.n0_grid},
              {"replicates", c.replicates},
              {"estimators", est},
              {"seed", c.seed},
              {"spec_variant", to_string(c.spec.variant)},
              {"spec", spec}};
}

SweepConfig sweep_config_from_json(const json& j) {
  SweepConfig c;
  if (!j.is_object()) throw InvalidArgument("sweep config must be a JSON object");
  try {
    if (j.contains("n1")) c.n1 = j.at("n1").get<std::size_t>();
    if (j.contains("n0_grid")) c.n0_grid = j.at("n0_grid").get<std::vector<std::size_t>>();
    if (j.contains("replicates")) c.replicates = j.at("replicates").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("estimators")) {
      c.estimators.clear();
      for (const auto& e : j.at("estimators")) {
        c.estimators.push_back(estimator_from_string(e.get<std::string>()));
      }
    }
    if (j.contains("spec")) {
      const auto& s = j.at("spec");
      if (s.contains("proportions")) c.spec.proportions = s.at("proportions").get<std::vector<double>>();
      if (s.contains("slopes")) c.spec.slopes = s.at("slopes").get<std::vector<double>>();
      if (s.contains("variant")) c.spec.variant = variant_from_string(s.at("variant").get<std::string>());
    }
    if (j.contains("spec_variant")) {
      c.spec.variant = variant_from_string(j.at("spec_variant").get<std::string>());
    }
  } catch (const json::exception& ex) {
    throw InvalidArgument(std::string("sweep config: ") + ex.what());
  }
  if (c.replicates < 1) throw InvalidArgument("sweep config: replicates must be >= 1");
  c.spec.validate();
  return c;
}

IntensityModel intensity_from_json(const json& j) {
  std::vector<IntensityComponent> comps;
  try {
    for (const auto& c : j.at("components")) {
      comps.push_back({c.value("log_weight", 0.0), c.value("alpha", 0.0),
                       vector_from_json(c.at("beta"))});
    }
  } catch (const json::exception& ex) {
    throw InvalidArgument(std::string("intensity model: ") + ex.what());
  }
  return IntensityModel(std::move(comps));
}

json to_json(const IntensityModel& model) {
  json comps = json::array();
  for (const auto& c : model.components()) {
    comps.push_back({{"log_weight", c.log_weight}, {"alpha", c.alpha}, {"beta", vector_json(c.beta)}});
  }
  return json{{"components", comps}};
}

ThinningModel thinning_from_json(const json& j) {
  try {
    const auto occ_idx = j.value("occurrence_features", std::vector<int>{});
    IntensityModel occ = j.contains("occurrence")
                             ? intensity_from_json(j.at("occurrence"))
                             : IntensityModel::log_linear(0.0, VectorXd::Zero(static_cast<Index>(occ_idx.size())));
    return ThinningModel(j.value("gamma", 0.0),
                         j.contains("delta") ? vector_from_json(j.at("delta")) : VectorXd(0),
                         j.value("detection_features", std::vector<int>{}), std::move(occ),
                         occ_idx);
  } catch (const json::exception& ex) {
    throw InvalidArgument(std::string("thinning model: ") + ex.what());
  }
}

Domain domain_from_json(const json& j) {
  std::vector<Domain::Interval> bounds;
  try {
    for (const auto& b : j.at("bounds")) {
      bounds.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
    }
  } catch (const json::exception& ex) {
    throw InvalidArgument(std::string("domain: ") + ex.what());
  }
  return Domain(std::move(bounds));
}

FeatureMap feature_map_from_json(const json& j) {
  const std::string type = j.value("type", std::string("identity"));
  if (type == "identity") return identity_features();
  if (type == "affine") {
    MatrixXd a;
    VectorXd b;
    try {
      const auto& rows = j.at("matrix");
      a.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows.at(0).size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows.at(r).size() != static_cast<std::size_t>(a.cols())) {
          throw InvalidArgument("affine feature map: ragged matrix");
        }
        for (std::size_t c = 0; c < rows.at(r).size(); ++c) {
          a(static_cast<Index>(r), static_cast<Index>(c)) = rows.at(r).at(c).get<double>();
        }
      }
      b = j.contains("offset") ? vector_from_json(j.at("offset")) : VectorXd::Zero(a.rows());
    } catch (const json::exception& ex) {
      throw InvalidArgument(std::string("affine feature map: ") + ex.what());
    }
    if (b.size() != a.rows()) throw InvalidArgument("affine feature map: offset length");
    return [a, b](const VectorXd& z) -> VectorXd {
      if (z.size() != a.cols()) throw InvalidArgument("affine feature map: location dimension");
      return a * z + b;
    };
  }
  throw InvalidArgument("unknown feature map type '" + type + "'");
}

// ---------------------------------------------------------------- figure data

std::string emit_figure_data(const SweepResult& sweep, const std::vector<std::string>& comments) {
  std::ostringstream out;
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "estimator,n0,replicate,beta_hat,beta_limit\n";
  const std::string limit = format_double(sweep.beta_limit);
  for (const auto& cell : sweep.cells) {
    out << to_string(cell.estimator) << ',' << cell.n0 << ',' << cell.replicate << ','
        << (cell.beta_hat ? format_double(*cell.beta_hat) : std::string("NA")) << ','
        << limit << '\n';
  }
  return out.str();
}

std::vector<FigureRow> read_figure_data(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  std::vector<FigureRow> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_skippable(line)) continue;
    const auto f = split_csv(line);
    if (!header_seen) {
      if (f != std::vector<std::string>{"estimator", "n0", "replicate", "beta_hat", "beta_limit"}) {
        throw CsvError(lineno, "unexpected figure-data header");
      }
      header_seen = true;
      continue;
    }
    if (f.size() != 5) throw CsvError(lineno, "expected 5 fields");
    FigureRow r;
    r.estimator = f[0];
    r.n0 = static_cast<std::size_t>(parse_number(f[1], lineno, "n0"));
    r.replicate = static_cast<int>(parse_number(f[2], lineno, "replicate"));
    if (f[3] != "NA") r.beta_hat = parse_number(f[3], lineno, "beta_hat");
    r.beta_limit = parse_number(f[4], lineno, "beta_limit");
    rows.push_back(std::move(r));
  }
  if (!header_seen) throw CsvError(lineno, "missing header row");
  return rows;
}

}  // namespace ponly
