#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gpnn/evaluator.hpp"
#include "gpnn/trainer.hpp"

namespace gpnn {

// ---- flat key = value config files, '#' comments
class ConfigMap {
 public:
  static ConfigMap parse_file(const std::string& path);
  static ConfigMap parse_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_str(const std::string& key) const;
  std::string get_str(const std::string& key, const std::string& dflt) const;
  int64_t get_int(const std::string& key) const;
  int64_t get_int(const std::string& key, int64_t dflt) const;
  double get_real(const std::string& key) const;
  double get_real(const std::string& key, double dflt) const;
  uint64_t get_u64(const std::string& key, uint64_t dflt) const;

  void set(const std::string& key, const std::string& value);
  // ConfigError listing any key outside the allowed set
  void require_known(const std::vector<std::string>& allowed) const;
  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

TrainConfig train_config_from(const ConfigMap& cfg);
// echo of all effective fields, sorted keys; the manifest embeds this
std::map<std::string, std::string> train_config_echo(const TrainConfig& cfg);

// ---- numeric formatting shared by every writer (byte-stable output)
std::string fmt_real(double v);

// ---- checkpoints: "GPNNCKPT", LE u32 version/n/L/d, LE u64 step/seed,
//      then row-major f64 W(1),b(1),...,W(L+1),b(L+1)
struct Checkpoint {
  NetworkParams params;
  uint64_t step = 0;
  uint64_t seed = 0;
};
void save_checkpoint(const std::string& path, const NetworkParams& params,
                     uint64_t step, uint64_t seed);
Checkpoint load_checkpoint(const std::string& path);

// ---- CSV emitters
void write_curve_csv(const std::string& path,
                     const std::vector<CurvePoint>& curve);
void write_eval_report_csv(const std::string& path, const EvalReport& r);
void write_cdf_csv(const std::string& path, const CdfResult& cdf);
void write_selection_csv(const std::string& path, const SelectionTable& t);
void write_axioms_csv(const std::string& path,
                      const std::vector<AxiomStats>& rows);
void write_heatmap_csv(const std::string& path, const HeatmapGrid& grid);
void write_equilibria_csv(const std::string& path,
                          const std::vector<std::pair<int64_t, Equilibrium>>&
                              rows);

// ---- game list CSV: n,seed,index,u1_11..u1_nn,u2_11..u2_nn (row-major)
void write_games_csv(const std::string& path, const std::vector<Game>& games,
                     uint64_t seed);
struct GameRow {
  int64_t index = 0;
  Game game;
};
std::vector<GameRow> read_games_csv(const std::string& path);

// ---- manifests: deterministic text, every emitted file checksummed
uint64_t fnv1a64_file(const std::string& path);
uint64_t fnv1a64(const std::string& bytes);
void write_manifest(const std::string& dir,
                    const std::map<std::string, std::string>& meta,
                    const std::vector<std::string>& files);
// true when every listed checksum matches; diagnostics to err
bool verify_manifest(const std::string& dir, std::string& err);

}  // namespace gpnn
