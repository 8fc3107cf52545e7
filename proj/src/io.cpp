#include "rerand/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rerand/moments.hpp"

namespace rerand {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("cannot open file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw validation_error("cannot write file '" + path + "'");
  out << content;
  if (!out) throw validation_error("write failed for '" + path + "'");
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

double parse_cell(const std::string& token, Index row, Index col,
                  const std::string& path) {
  const char* begin = token.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(v))
    throw validation_error(path + ": cell (row " + std::to_string(row) +
                           ", col " + std::to_string(col) + "): '" + token +
                           "' is not a finite number");
  return v;
}

std::vector<std::string> split_row(const std::string& line, char delim) {
  std::vector<std::string> cells;
  if (delim == ' ') {
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) cells.push_back(tok);
    return cells;
  }
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      cells.push_back(cur);
      cur.clear();
    } else if (c != ' ' && c != '\t') {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

}  // namespace

CovariateTable standardize_covariates(const Matrix& raw,
                                      std::vector<std::string> names) {
  const Index n = raw.rows(), p = raw.cols();
  require(n >= 2 && p >= 1, "standardize: need at least 2 rows and 1 column");
  if (names.empty())
    for (Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  require(static_cast<Index>(names.size()) == p, "standardize: name count mismatch");

  CovariateTable table;
  table.raw = raw;
  table.column_names = std::move(names);
  table.standardized.resize(n, p);
  for (Index j = 0; j < p; ++j) {
    double mean = raw.col(j).mean();
    double sd = std::sqrt((raw.col(j).array() - mean).square().sum() /
                          static_cast<double>(n - 1));
    if (!(sd > 0.0))
      throw validation_error("constant column rejected: '" + table.column_names[static_cast<size_t>(j)] +
                             "' (column " + std::to_string(j + 1) + ") has zero variance");
    table.standardized.col(j) = (raw.col(j).array() - mean) / sd;
  }
  return table;
}

CovariateTable ingest_covariates(const std::string& path, bool has_header) {
  std::vector<std::string> lines = split_lines(read_file(path));
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  require(!lines.empty(), path + ": file is empty");

  char delim = ' ';
  for (char c : lines[0]) {
    if (c == ',') { delim = ','; break; }
    if (c == ';') { delim = ';'; break; }
    if (c == '\t') { delim = '\t'; break; }
  }

  std::vector<std::string> names;
  size_t first_row = 0;
  if (has_header) {
    names = split_row(lines[0], delim);
    first_row = 1;
    require(lines.size() > 1, path + ": header but no data rows");
  }

  std::vector<std::vector<double>> rows;
  Index width = -1;
  for (size_t li = first_row; li < lines.size(); ++li) {
    if (lines[li].empty())
      throw validation_error(path + ": row " + std::to_string(li - first_row + 1) +
                             " is empty");
    std::vector<std::string> cells = split_row(lines[li], delim);
    if (width < 0) width = static_cast<Index>(cells.size());
    if (static_cast<Index>(cells.size()) != width)
      throw validation_error(path + ": row " + std::to_string(li - first_row + 1) +
                             " has " + std::to_string(cells.size()) +
                             " cells, expected " + std::to_string(width));
    std::vector<double> row(static_cast<size_t>(width));
    for (Index c = 0; c < width; ++c) {
      const std::string& tok = cells[static_cast<size_t>(c)];
      if (tok.empty() || tok == "NA" || tok == "nan" || tok == "NaN")
        throw validation_error(path + ": missing value at (row " +
                               std::to_string(li - first_row + 1) + ", col " +
                               std::to_string(c + 1) + ")");
      row[static_cast<size_t>(c)] =
          parse_cell(tok, static_cast<Index>(li - first_row + 1), c + 1, path);
    }
    rows.push_back(std::move(row));
  }
  const Index n = static_cast<Index>(rows.size());
  if (n % 2 != 0)
    throw validation_error(path + ": " + std::to_string(n) +
                           " subjects; forced balance needs an even n");
  Matrix raw(n, width);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < width; ++j)
      raw(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
  return standardize_covariates(raw, names);
}

Vector load_vector(const std::string& path) {
  std::vector<std::string> lines = split_lines(read_file(path));
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  require(!lines.empty(), path + ": file is empty");
  Vector v(static_cast<Index>(lines.size()));
  for (size_t i = 0; i < lines.size(); ++i)
    v[static_cast<Index>(i)] = parse_cell(lines[i], static_cast<Index>(i + 1), 1, path);
  return v;
}

Vector load_assignment_file(const std::string& path) {
  std::vector<std::string> lines = split_lines(read_file(path));
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  require(lines.size() == 1, path + ": expected a single '+'/'-' line");
  return parse_assignment(lines[0]);
}

void save_pool(const AssignmentPool& pool, const std::string& path) {
  std::ostringstream out;
  out << "n=" << pool.n << " S=" << pool.size() << " seed=" << pool.seed << "\n";
  for (Index i = 0; i < pool.size(); ++i)
    out << format_assignment(pool.assignments.col(i)) << "\n";
  write_file(path, out.str());
}

AssignmentPool load_pool(const std::string& path) {
  std::vector<std::string> lines = split_lines(read_file(path));
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  require(!lines.empty(), path + ": file is empty");
  long long n = 0, s = 0;
  unsigned long long seed = 0;
  if (std::sscanf(lines[0].c_str(), "n=%lld S=%lld seed=%llu", &n, &s, &seed) != 3)
    throw validation_error(path + ": bad pool header '" + lines[0] + "'");
  require(static_cast<long long>(lines.size()) - 1 == s,
          path + ": header declares S=" + std::to_string(s) + " but file has " +
              std::to_string(lines.size() - 1) + " assignments");
  AssignmentPool pool;
  pool.n = static_cast<Index>(n);
  pool.seed = seed;
  pool.assignments.resize(pool.n, static_cast<Index>(s));
  for (long long i = 0; i < s; ++i) {
    Vector w = parse_assignment(lines[static_cast<size_t>(i + 1)]);
    require(w.size() == pool.n, path + ": assignment " + std::to_string(i + 1) +
                                    " has length " + std::to_string(w.size()) +
                                    ", expected " + std::to_string(pool.n));
    pool.assignments.col(static_cast<Index>(i)) = w;
  }
  pool.origin.assign(static_cast<size_t>(s), AssignmentOrigin::base);
  return pool;
}

std::string iso_utc_now() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string design_to_json(const DesignArtifact& artifact) {
  const DesignResult& r = artifact.result;
  json j;
  j["schema_version"] = artifact.schema_version;
  j["created_at"] = artifact.created_at;
  j["config"] = {{"n", r.n},
                 {"p", r.p},
                 {"pool_size", r.pool_size},
                 {"generator", r.generator},
                 {"metric", r.metric_name},
                 {"tail", r.tail_name},
                 {"mode", r.mode_name},
                 {"q", r.q},
                 {"pool_seed", r.pool_seed},
                 {"tail_seed", r.tail_seed}};
  j["covariates"]["column_names"] = artifact.covariates.column_names;
  {
    json rows = json::array();
    const Matrix& x = artifact.covariates.standardized;
    for (Index i = 0; i < x.rows(); ++i) {
      json row = json::array();
      for (Index c = 0; c < x.cols(); ++c) row.push_back(x(i, c));
      rows.push_back(std::move(row));
    }
    j["covariates"]["standardized"] = std::move(rows);
  }
  json res;
  res["s_star"] = r.s_star;
  res["a_star"] = r.a_star;
  res["q_star"] = r.q_star;
  res["inference_fragile"] = r.inference_fragile;
  res["clamped_eigen_mass"] = r.clamped_eigen_mass;
  res["smoothed_selection"] = r.smoothed_selection;
  {
    json s = json::array(), a = json::array(), q_raw = json::array(), q_sm = json::array();
    bool any_smoothed = false;
    for (const TracePoint& pt : r.trace) {
      s.push_back(pt.s);
      a.push_back(pt.a);
      q_raw.push_back(pt.q_raw);
      if (pt.has_smoothed) {
        q_sm.push_back(pt.q_smoothed);
        any_smoothed = true;
      }
    }
    res["trace"] = {{"s", std::move(s)}, {"a", std::move(a)}, {"q_raw", std::move(q_raw)}};
    if (any_smoothed) res["trace"]["q_smoothed"] = std::move(q_sm);
  }
  {
    json lines = json::array();
    for (Index i = 0; i < r.w_star.cols(); ++i)
      lines.push_back(format_assignment(r.w_star.col(i)));
    res["assignments"] = std::move(lines);
    bool any_greedy = false;
    for (AssignmentOrigin o : r.w_star_origin)
      if (o == AssignmentOrigin::greedy) any_greedy = true;
    if (any_greedy) {
      json origin = json::array();
      for (AssignmentOrigin o : r.w_star_origin)
        origin.push_back(static_cast<int>(o));
      res["origin"] = std::move(origin);
    }
  }
  j["result"] = std::move(res);
  return j.dump(2) + "\n";
}

DesignArtifact design_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw validation_error(std::string("design artifact: JSON parse error: ") + e.what());
  }
  DesignArtifact artifact;
  try {
    artifact.schema_version = j.at("schema_version").get<int>();
    if (artifact.schema_version != 1)
      throw validation_error("design artifact: schema version " +
                             std::to_string(artifact.schema_version) +
                             " is not supported (expected 1)");
    artifact.created_at = j.at("created_at").get<std::string>();
    const json& cfg = j.at("config");
    DesignResult& r = artifact.result;
    r.n = cfg.at("n").get<Index>();
    r.p = cfg.at("p").get<Index>();
    r.pool_size = cfg.at("pool_size").get<Index>();
    r.generator = cfg.at("generator").get<std::string>();
    r.metric_name = cfg.at("metric").get<std::string>();
    r.tail_name = cfg.at("tail").get<std::string>();
    r.mode_name = cfg.at("mode").get<std::string>();
    r.q = cfg.at("q").get<double>();
    r.pool_seed = cfg.at("pool_seed").get<std::uint64_t>();
    r.tail_seed = cfg.at("tail_seed").get<std::uint64_t>();

    const json& cov = j.at("covariates");
    artifact.covariates.column_names =
        cov.at("column_names").get<std::vector<std::string>>();
    const json& rows = cov.at("standardized");
    artifact.covariates.standardized.resize(static_cast<Index>(rows.size()), r.p);
    for (Index i = 0; i < static_cast<Index>(rows.size()); ++i) {
      const json& row = rows[static_cast<size_t>(i)];
      require(static_cast<Index>(row.size()) == r.p,
              "design artifact: covariate row width mismatch");
      for (Index c = 0; c < r.p; ++c)
        artifact.covariates.standardized(i, c) = row[static_cast<size_t>(c)].get<double>();
    }

    const json& res = j.at("result");
    r.s_star = res.at("s_star").get<Index>();
    r.a_star = res.at("a_star").get<double>();
    r.q_star = res.at("q_star").get<double>();
    r.inference_fragile = res.at("inference_fragile").get<bool>();
    r.clamped_eigen_mass = res.at("clamped_eigen_mass").get<double>();
    r.smoothed_selection = res.at("smoothed_selection").get<bool>();

    const json& tr = res.at("trace");
    const json& ts = tr.at("s");
    const json& ta = tr.at("a");
    const json& tq = tr.at("q_raw");
    bool smoothed = tr.contains("q_smoothed");
    require(ts.size() == ta.size() && ts.size() == tq.size(),
            "design artifact: trace arrays differ in length");
    for (size_t i = 0; i < ts.size(); ++i) {
      TracePoint pt;
      pt.s = ts[i].get<Index>();
      pt.a = ta[i].get<double>();
      pt.q_raw = tq[i].get<double>();
      if (smoothed) {
        pt.q_smoothed = tr.at("q_smoothed")[i].get<double>();
        pt.has_smoothed = true;
      }
      r.trace.push_back(pt);
    }

    const json& lines = res.at("assignments");
    require(static_cast<Index>(lines.size()) == r.s_star,
            "design artifact: W* holds " + std::to_string(lines.size()) +
                " assignments but s_star = " + std::to_string(r.s_star));
    r.w_star.resize(r.n, r.s_star);
    for (Index i = 0; i < r.s_star; ++i) {
      Vector w = parse_assignment(lines[static_cast<size_t>(i)].get<std::string>());
      require(w.size() == r.n, "design artifact: assignment length " +
                                   std::to_string(w.size()) + " does not match n = " +
                                   std::to_string(r.n));
      r.w_star.col(i) = w;
    }
    r.w_star_origin.assign(static_cast<size_t>(r.s_star), AssignmentOrigin::base);
    if (res.contains("origin")) {
      const json& origin = res.at("origin");
      require(static_cast<Index>(origin.size()) == r.s_star,
              "design artifact: origin array length mismatch");
      for (Index i = 0; i < r.s_star; ++i)
        r.w_star_origin[static_cast<size_t>(i)] =
            static_cast<AssignmentOrigin>(origin[static_cast<size_t>(i)].get<int>());
    }
  } catch (const json::exception& e) {
    throw validation_error(std::string("design artifact: malformed document: ") + e.what());
  }
  return artifact;
}

void save_design(const DesignArtifact& artifact, const std::string& path) {
  write_file(path, design_to_json(artifact));
}

DesignArtifact load_design(const std::string& path) {
  return design_from_json(read_file(path));
}

std::vector<std::string> validate_design(const DesignArtifact& artifact) {
  const DesignResult& r = artifact.result;
  std::vector<std::string> findings;

  require(r.s_star >= 1 && r.s_star == r.w_star.cols(),
          "validate: s_star does not match the stored W*");
  for (Index i = 0; i < r.s_star; ++i)
    require_balanced(r.w_star.col(i), "validate: W* assignment " + std::to_string(i + 1));

  {
    std::set<std::string> have;
    for (Index i = 0; i < r.s_star; ++i)
      have.insert(format_assignment(r.w_star.col(i)));
    for (Index i = 0; i < r.s_star; ++i)
      require(have.count(format_assignment(-r.w_star.col(i).eval())) == 1,
              "validate: W* is not mirror-closed at assignment " + std::to_string(i + 1));
    require(static_cast<Index>(have.size()) == r.s_star, "validate: W* holds duplicates");
  }

  require(!r.trace.empty(), "validate: empty sweep trace");
  double q_min = std::numeric_limits<double>::infinity();
  Index q_arg = -1;
  for (size_t i = 0; i < r.trace.size(); ++i) {
    if (i > 0) {
      require(r.trace[i].s > r.trace[i - 1].s, "validate: trace s not ascending");
      require(r.trace[i].a >= r.trace[i - 1].a, "validate: trace a not non-decreasing");
    }
    double sel = r.smoothed_selection ? r.trace[i].q_smoothed : r.trace[i].q_raw;
    if (sel < q_min) {
      q_min = sel;
      q_arg = static_cast<Index>(i);
    }
  }
  require(std::abs(q_min - r.q_star) <= 1e-9 * std::max(1.0, std::abs(r.q_star)),
          "validate: q_star is not the trace minimum");
  require(r.trace[static_cast<size_t>(q_arg)].s == r.s_star,
          "validate: s_star is not the smallest minimizer in the trace");

  if (r.inference_fragile)
    findings.push_back("design is flagged inference-fragile (s* < 10 n); the "
                       "moment estimates behind the criterion may be inaccurate");
  if (r.clamped_eigen_mass > 1e-6)
    findings.push_back("criterion clamped negative eigenvalue mass " +
                       std::to_string(r.clamped_eigen_mass));

  if (artifact.covariates.standardized.size() > 0) {
    const Matrix& X = artifact.covariates.standardized;
    require(X.rows() == r.n, "validate: covariate rows differ from design n");
    BalanceMetric metric = BalanceMetric::parse(r.metric_name);
    ImbalanceEvaluator eval(X, metric);
    double prev = -1.0;
    for (Index i = 0; i < r.s_star; ++i) {
      double b = eval(r.w_star.col(i));
      require(b >= prev - 1e-12, "validate: W* imbalances are not non-decreasing");
      prev = b;
    }
    require(std::abs(prev - r.a_star) <= 1e-9 * std::max(1.0, std::abs(r.a_star)),
            "validate: a_star does not equal the imbalance of the last W* member");

    ProjectionCache cache = projection_cache(X);
    MomentAccumulator acc(cache);
    for (Index i = 0; i < r.s_star; ++i) acc.add(r.w_star.col(i));
    StrategyMoments m = acc.snapshot();
    require((m.sigma_sum.diagonal().array() == static_cast<double>(r.s_star)).all(),
            "validate: Sigma_W diagonal identity failed");
    require((m.sigma_sum * Vector::Ones(r.n)).cwiseAbs().maxCoeff() == 0.0,
            "validate: forced-balance identity Sigma_W 1 = 0 failed");
    double tr_d = m.d.trace();
    double tr_ps = (cache.P.cwiseProduct(m.sigma_w)).sum();
    require(std::abs(tr_d - static_cast<double>(r.n) * tr_ps) <=
                1e-8 * std::max(1.0, std::abs(tr_d)),
            "validate: trace identity tr(D) = n tr(P Sigma_W) failed");
    findings.push_back("moment identities verified against covariates");
  }
  return findings;
}

}  // namespace rerand
