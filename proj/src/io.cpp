#include "gpnn/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gpnn/errors.hpp"

namespace gpnn {

namespace fs = std::filesystem;

// ---- config ----------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

ConfigMap ConfigMap::parse_string(const std::string& text) {
  ConfigMap cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (cfg.kv_.count(key))
      throw ConfigError("duplicate key: " + key);
    cfg.kv_[key] = value;
  }
  return cfg;
}

ConfigMap ConfigMap::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str());
}

bool ConfigMap::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string ConfigMap::get_str(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("missing key: " + key);
  return it->second;
}

std::string ConfigMap::get_str(const std::string& key,
                               const std::string& dflt) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? dflt : it->second;
}

namespace {

int64_t to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    int64_t out = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("key " + key + ": not an integer: " + v);
  }
}

double to_real(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("key " + key + ": not a number: " + v);
  }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    uint64_t out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("key " + key + ": not an unsigned integer: " + v);
  }
}

}  // namespace

int64_t ConfigMap::get_int(const std::string& key) const {
  return to_int(key, get_str(key));
}
int64_t ConfigMap::get_int(const std::string& key, int64_t dflt) const {
  return has(key) ? get_int(key) : dflt;
}
double ConfigMap::get_real(const std::string& key) const {
  return to_real(key, get_str(key));
}
double ConfigMap::get_real(const std::string& key, double dflt) const {
  return has(key) ? get_real(key) : dflt;
}
uint64_t ConfigMap::get_u64(const std::string& key, uint64_t dflt) const {
  return has(key) ? to_u64(key, get_str(key)) : dflt;
}

void ConfigMap::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

void ConfigMap::require_known(const std::vector<std::string>& allowed) const {
  std::string bad;
  for (const auto& [k, v] : kv_)
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      bad += (bad.empty() ? "" : ", ") + k;
  if (!bad.empty()) throw ConfigError("unknown keys: " + bad);
}

namespace {

Matrix subspace_from_name(const std::string& key, const std::string& name) {
  if (name == "M") return subspace_M();
  if (name == "N") return subspace_N();
  throw ConfigError("key " + key + ": expected M or N, got " + name);
}

std::string matrix_echo(const Matrix& m) {
  std::string out;
  for (int j = 0; j < m.rows(); ++j)
    for (int k = 0; k < m.cols(); ++k) {
      if (!out.empty()) out += ",";
      out += fmt_real(m(j, k));
    }
  return out;
}

}  // namespace

TrainConfig train_config_from(const ConfigMap& cfg) {
  cfg.require_known({"n", "mode", "tilt", "v1", "v2", "layers", "width",
                     "layers1", "width1", "layers2", "width2", "total_games",
                     "batch_size", "eta0", "alpha", "loss", "feedback", "seed",
                     "eval_points", "checkpoint_every", "test_size"});
  TrainConfig out;
  int n = static_cast<int>(cfg.get_int("n", 2));
  if (n < 2 || n > 5) throw ConfigError("n must be in [2,5]");
  out.sampler.n = n;
  std::string mode = cfg.get_str("mode", "uniform");
  if (mode == "uniform")
    out.sampler.mode = SampleMode::uniform;
  else if (mode == "nonuniform")
    out.sampler.mode = SampleMode::nonuniform;
  else if (mode == "subspace")
    out.sampler.mode = SampleMode::subspace;
  else
    throw ConfigError("mode must be uniform, nonuniform or subspace");
  out.sampler.tilt = cfg.get_real("tilt", 2.0);
  out.sampler.spec.v1 = subspace_from_name("v1", cfg.get_str("v1", "M"));
  out.sampler.spec.v2 = subspace_from_name("v2", cfg.get_str("v2", "M"));

  int layers = static_cast<int>(cfg.get_int("layers", 8));
  int width = static_cast<int>(cfg.get_int("width", n == 2 ? 256 : 512));
  out.shape1 = {n, static_cast<int>(cfg.get_int("layers1", layers)),
                static_cast<int>(cfg.get_int("width1", width))};
  out.shape2 = {n, static_cast<int>(cfg.get_int("layers2", layers)),
                static_cast<int>(cfg.get_int("width2", width))};
  for (const auto& s : {out.shape1, out.shape2}) {
    if (s.L < 1) throw ConfigError("layers must be >= 1");
    if (s.d <= 2 * n * n) throw ConfigError("width must exceed 2*n*n");
  }

  std::string feedback = cfg.get_str("feedback", "full");
  if (feedback == "full")
    out.feedback = FeedbackMode::full_mixed;
  else if (feedback == "realized")
    out.feedback = FeedbackMode::realized_action;
  else
    throw ConfigError("feedback must be full or realized");
  std::string loss = cfg.get_str("loss", "squared");
  if (loss == "squared")
    out.loss = LossKind::squared_regret;
  else if (loss == "linear")
    out.loss = LossKind::linear_regret;
  else
    throw ConfigError("loss must be squared or linear");

  out.total_games = cfg.get_int("total_games", 0);
  out.batch_size = static_cast<int>(cfg.get_int("batch_size", 128));
  out.eta0 = cfg.get_real(
      "eta0", out.feedback == FeedbackMode::realized_action ? 0.005 : 0.5);
  out.alpha = cfg.get_real("alpha", 0.999999);
  out.seed = cfg.get_u64("seed", 1);
  out.sampler.seed = out.seed;
  out.eval_points = static_cast<int>(cfg.get_int("eval_points", 48));
  out.checkpoint_every = cfg.get_int("checkpoint_every", 0);
  out.test_size = cfg.get_int("test_size", 8192);
  return out;
}

std::map<std::string, std::string> train_config_echo(const TrainConfig& cfg) {
  std::map<std::string, std::string> m;
  m["n"] = std::to_string(cfg.sampler.n);
  switch (cfg.sampler.mode) {
    case SampleMode::uniform:
      m["mode"] = "uniform";
      break;
    case SampleMode::nonuniform:
      m["mode"] = "nonuniform";
      break;
    case SampleMode::subspace:
      m["mode"] = "subspace";
      break;
  }
  m["tilt"] = fmt_real(cfg.sampler.tilt);
  m["v1"] = matrix_echo(cfg.sampler.spec.v1);
  m["v2"] = matrix_echo(cfg.sampler.spec.v2);
  m["layers1"] = std::to_string(cfg.shape1.L);
  m["width1"] = std::to_string(cfg.shape1.d);
  m["layers2"] = std::to_string(cfg.shape2.L);
  m["width2"] = std::to_string(cfg.shape2.d);
  m["total_games"] = std::to_string(cfg.total_games);
  m["batch_size"] = std::to_string(cfg.batch_size);
  m["eta0"] = fmt_real(cfg.eta0);
  m["alpha"] = fmt_real(cfg.alpha);
  m["loss"] =
      cfg.loss == LossKind::squared_regret ? "squared" : "linear";
  m["feedback"] =
      cfg.feedback == FeedbackMode::full_mixed ? "full" : "realized";
  m["seed"] = std::to_string(cfg.seed);
  m["eval_points"] = std::to_string(cfg.eval_points);
  m["checkpoint_every"] = std::to_string(cfg.checkpoint_every);
  m["test_size"] = std::to_string(cfg.test_size);
  return m;
}

std::string fmt_real(double v) {
  if (v == 0.0) v = 0.0;  // flush -0
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---- checkpoints -------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'G', 'P', 'N', 'N', 'C', 'K', 'P', 'T'};

void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = (v >> (8 * i)) & 0xff;
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xff;
  out.write(reinterpret_cast<const char*>(b), 8);
}

uint32_t take_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw CheckpointFormatError("truncated header");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= uint32_t(b[i]) << (8 * i);
  return v;
}

uint64_t take_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8))
    throw CheckpointFormatError("truncated header");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t(b[i]) << (8 * i);
  return v;
}

using RowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

void save_checkpoint(const std::string& path, const NetworkParams& params,
                     uint64_t step, uint64_t seed) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointFormatError("cannot write " + path);
  out.write(kMagic, 8);
  put_u32(out, 1);
  put_u32(out, uint32_t(params.shape.n));
  put_u32(out, uint32_t(params.shape.L));
  put_u32(out, uint32_t(params.shape.d));
  put_u64(out, step);
  put_u64(out, seed);
  for (size_t l = 0; l < params.W.size(); ++l) {
    RowMajor rm = params.W[l];
    out.write(reinterpret_cast<const char*>(rm.data()),
              std::streamsize(sizeof(double)) * rm.size());
    out.write(reinterpret_cast<const char*>(params.b[l].data()),
              std::streamsize(sizeof(double)) * params.b[l].size());
  }
  if (!out) throw CheckpointFormatError("short write: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointFormatError("cannot open " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw CheckpointFormatError("bad magic: " + path);
  uint32_t version = take_u32(in);
  if (version != 1)
    throw CheckpointFormatError("unsupported version " +
                                std::to_string(version));
  Checkpoint ck;
  NetworkShape s;
  s.n = static_cast<int>(take_u32(in));
  s.L = static_cast<int>(take_u32(in));
  s.d = static_cast<int>(take_u32(in));
  if (s.n < 1 || s.L < 1 || s.d < 1 || s.n > 64 || s.L > 64 || s.d > 65536)
    throw CheckpointFormatError("implausible shape in " + path);
  ck.step = take_u64(in);
  ck.seed = take_u64(in);
  ck.params = zero_params(s);
  for (size_t l = 0; l < ck.params.W.size(); ++l) {
    RowMajor rm(ck.params.W[l].rows(), ck.params.W[l].cols());
    if (!in.read(reinterpret_cast<char*>(rm.data()),
                 std::streamsize(sizeof(double)) * rm.size()))
      throw CheckpointFormatError("truncated weights: " + path);
    ck.params.W[l] = rm;
    if (!in.read(reinterpret_cast<char*>(ck.params.b[l].data()),
                 std::streamsize(sizeof(double)) * ck.params.b[l].size()))
      throw CheckpointFormatError("truncated biases: " + path);
  }
  in.peek();
  if (!in.eof()) throw CheckpointFormatError("trailing bytes: " + path);
  return ck;
}

// ---- CSV --------------------------------------------------------------------

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ParseError("cannot write " + path);
  return out;
}

}  // namespace

void write_curve_csv(const std::string& path,
                     const std::vector<CurvePoint>& curve) {
  auto out = open_csv(path);
  out << "step,games_seen,eta,maxreg_all,maxreg_pure,maxreg_mixed\n";
  for (const auto& p : curve)
    out << p.step << "," << p.games_seen << "," << fmt_real(p.eta) << ","
        << fmt_real(p.maxreg_all) << "," << fmt_real(p.maxreg_pure) << ","
        << fmt_real(p.maxreg_mixed) << "\n";
}

void write_eval_report_csv(const std::string& path, const EvalReport& r) {
  auto out = open_csv(path);
  out << "bucket,count,frequency,mean_maxreg,std_maxreg,benchmark_mean,"
         "exact_pure_rate,dominated_mass,nonrational_mass,"
         "degenerate_excluded\n";
  const char* names[4] = {"0", "1", ">1", "all"};
  for (int b = 0; b < 4; ++b) {
    const EvalBucket& k = r.buckets[b];
    out << names[b] << "," << k.count << "," << fmt_real(r.frequency(b)) << ","
        << fmt_real(k.mean_maxreg) << "," << fmt_real(k.std_maxreg) << ","
        << fmt_real(k.benchmark_mean) << "," << fmt_real(k.exact_pure_rate)
        << "," << fmt_real(k.dominated_mass) << ","
        << fmt_real(k.nonrational_mass) << "," << r.degenerate_excluded
        << "\n";
  }
}

void write_cdf_csv(const std::string& path, const CdfResult& cdf) {
  auto out = open_csv(path);
  out << "epsilon,fraction\n";
  for (const auto& [eps, frac] : cdf.points)
    out << fmt_real(eps) << "," << fmt_real(frac) << "\n";
}

void write_selection_csv(const std::string& path, const SelectionTable& t) {
  auto out = open_csv(path);
  out << "cell,count,frequency,conditional\n";
  auto rate = [](int64_t num, int64_t den) {
    return fmt_real(den > 0 ? double(num) / double(den) : 0.0);
  };
  auto row = [&](const std::string& cell, int64_t count, int64_t den,
                 const std::string& cond) {
    out << cell << "," << count << "," << rate(count, den) << "," << cond
        << "\n";
  };
  row("total", t.total, t.total, "");
  row("selected_rd", t.selected_rd, t.total, "");
  row("rd_utilitarian", t.rd_util, t.total,
      rate(t.selected_rd_given_util, t.rd_util));
  row("rd_not_utilitarian", t.rd_not_util, t.total,
      rate(t.selected_rd_given_not_util, t.rd_not_util));
  row("selected_utilitarian", t.selected_util, t.total, "");
  row("pd_exists", t.pd_exists, t.total, "");
  row("rd_payoff_dominant", t.rd_is_pd, t.pd_exists,
      rate(t.selected_rd_given_pd, t.rd_is_pd));
  row("rd_not_payoff_dominant", t.rd_not_pd, t.pd_exists,
      rate(t.selected_rd_given_not_pd, t.rd_not_pd));
  row("selected_payoff_dominant", t.selected_pd, t.pd_exists, "");
  row("excluded_tracing", t.excluded_tracing, 0, "");
  row("excluded_quarantined", t.excluded_quarantined, 0, "");
  row("excluded_degenerate", t.excluded_degenerate, 0, "");
}

void write_axioms_csv(const std::string& path,
                      const std::vector<AxiomStats>& rows) {
  auto out = open_csv(path);
  out << "axiom,games,transforms,mean,std,q90,q99\n";
  for (const auto& a : rows)
    out << a.axiom << "," << a.games << "," << a.transforms << ","
        << fmt_real(a.mean) << "," << fmt_real(a.std_dev) << ","
        << fmt_real(a.q90) << "," << fmt_real(a.q99) << "\n";
}

void write_heatmap_csv(const std::string& path, const HeatmapGrid& grid) {
  auto out = open_csv(path);
  out << "theta1,theta2,p1_action1,p2_action1,maxreg\n";
  for (const auto& c : grid.cells)
    out << fmt_real(c.theta1) << "," << fmt_real(c.theta2) << ","
        << fmt_real(c.p1_action1) << "," << fmt_real(c.p2_action1) << ","
        << fmt_real(c.maxreg) << "\n";
}

void write_equilibria_csv(
    const std::string& path,
    const std::vector<std::pair<int64_t, Equilibrium>>& rows) {
  auto out = open_csv(path);
  const int n =
      rows.empty() ? 2 : static_cast<int>(rows[0].second.profile.s1.size());
  out << "game_index,eq_index,kind";
  for (int j = 1; j <= n; ++j) out << ",s1_" << j;
  for (int k = 1; k <= n; ++k) out << ",s2_" << k;
  out << ",residual\n";
  int64_t prev = -1, eq_index = 0;
  for (const auto& [gi, eq] : rows) {
    eq_index = (gi == prev) ? eq_index + 1 : 0;
    prev = gi;
    out << gi << "," << eq_index << ","
        << (eq.kind == EqKind::pure ? "pure" : "mixed");
    for (int j = 0; j < n; ++j) out << "," << fmt_real(eq.profile.s1(j));
    for (int k = 0; k < n; ++k) out << "," << fmt_real(eq.profile.s2(k));
    out << "," << fmt_real(eq.residual) << "\n";
  }
}

void write_games_csv(const std::string& path, const std::vector<Game>& games,
                     uint64_t seed) {
  auto out = open_csv(path);
  const int n = games.empty() ? 2 : games[0].n();
  out << "n,seed,index";
  for (int p = 1; p <= 2; ++p)
    for (int j = 1; j <= n; ++j)
      for (int k = 1; k <= n; ++k) out << ",u" << p << "_" << j << k;
  out << "\n";
  for (size_t i = 0; i < games.size(); ++i) {
    out << n << "," << seed << "," << i;
    for (const Matrix* u : {&games[i].u1, &games[i].u2})
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) out << "," << fmt_real((*u)(j, k));
    out << "\n";
  }
}

std::vector<GameRow> read_games_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file: " + path);
  std::vector<GameRow> rows;
  int64_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    auto bad = [&](const std::string& why) {
      return ParseError(path + " line " + std::to_string(lineno) + ": " + why);
    };
    if (cells.size() < 3) throw bad("too few columns");
    int n = 0;
    try {
      n = std::stoi(cells[0]);
    } catch (const std::exception&) {
      throw bad("bad n");
    }
    if (n < 2 || cells.size() != size_t(3 + 2 * n * n))
      throw bad("column count does not match n");
    GameRow row;
    try {
      row.index = std::stoll(cells[2]);
      row.game.u1.resize(n, n);
      row.game.u2.resize(n, n);
      size_t c = 3;
      for (Matrix* u : {&row.game.u1, &row.game.u2})
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) (*u)(j, k) = std::stod(cells[c++]);
    } catch (const std::exception&) {
      throw bad("bad numeric cell");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---- manifests ---------------------------------------------------------------

uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  uint64_t h = 14695981039346656037ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!in) break;
  }
  return h;
}

namespace {

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)v);
  return buf;
}

}  // namespace

void write_manifest(const std::string& dir,
                    const std::map<std::string, std::string>& meta,
                    const std::vector<std::string>& files) {
  std::string head = "format_version=1\n";
  for (const auto& [k, v] : meta) head += k + "=" + v + "\n";
  std::string body = head;
  body += "run_id=" + hex64(fnv1a64(head)) + "\n";
  std::vector<std::string> sorted = files;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& f : sorted)
    body += "file." + f + "=" + hex64(fnv1a64_file((fs::path(dir) / f).string())) +
            "\n";
  std::ofstream out(fs::path(dir) / "manifest", std::ios::trunc);
  if (!out) throw ParseError("cannot write manifest in " + dir);
  out << body;
}

bool verify_manifest(const std::string& dir, std::string& err) {
  err.clear();
  std::ifstream in(fs::path(dir) / "manifest");
  if (!in) {
    err = "manifest missing in " + dir;
    return false;
  }
  bool ok = true;
  std::string line;
  int64_t checked = 0;
  while (std::getline(in, line)) {
    if (line.rfind("file.", 0) != 0) continue;
    size_t eq = line.rfind('=');
    if (eq == std::string::npos || eq <= 5) {
      err += "malformed line: " + line + "\n";
      ok = false;
      continue;
    }
    std::string name = line.substr(5, eq - 5);
    std::string want = line.substr(eq + 1);
    std::string path = (fs::path(dir) / name).string();
    ++checked;
    try {
      std::string got = hex64(fnv1a64_file(path));
      if (got != want) {
        err += name + ": checksum mismatch\n";
        ok = false;
      }
    } catch (const ParseError&) {
      err += name + ": missing\n";
      ok = false;
    }
  }
  if (checked == 0) {
    err += "no file entries\n";
    ok = false;
  }
  return ok;
}

}  // namespace gpnn
