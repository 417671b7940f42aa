/*
 * Copyright 2026 The adlis Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#include "cli.hpp"

#include "adlis/diagnostics.hpp"
#include "adlis/errors.hpp"
#include "adlis/estimators.hpp"
#include "adlis/model.hpp"
#include "adlis/recovery.hpp"
#include "adlis/samplers.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

namespace adlis::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SampleConfig {
  std::string model = "gaussian";
  int size = -1;  // model default
  std::uint64_t data_seed = 0;
  std::string method = "adla";
  int n = 1;
  int draws = 1000;
  int warmup = 1000;
  int chains = 1;
  std::uint64_t seed = 0;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  bool warm_start = false;
  bool recover_latent = false;
  bool timing = true;
  std::string out = "adlis-out";
};

int default_size(const std::string& model) {
  if (model == "gaussian") return 5;
  if (model == "gp-poisson") return 20;
  if (model == "scalar-poisson") return 3;
  if (model == "mixed-nb") return 6;
  return 0;
}

const std::vector<std::string> kModels{"gaussian", "gp-poisson", "scalar-poisson", "mixed-nb", "simple-cauchy"};
const std::vector<std::string> kMethods{"base", "adla", "is", "pm", "qmc", "rqmc"};

ordered_json to_json(const SampleConfig& c) {
  return ordered_json{{"model", c.model},
                      {"size", c.size},
                      {"data_seed", c.data_seed},
                      {"method", c.method},
                      {"n", c.n},
                      {"draws", c.draws},
                      {"warmup", c.warmup},
                      {"chains", c.chains},
                      {"seed", c.seed},
                      {"target_accept", c.target_accept},
                      {"max_tree_depth", c.max_tree_depth},
                      {"warm_start", c.warm_start},
                      {"recover_latent", c.recover_latent},
                      {"timing", c.timing},
                      {"out", c.out}};
}

void apply_json(SampleConfig& c, const ordered_json& j) {
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "model") c.model = value.get<std::string>();
      else if (key == "size") c.size = value.get<int>();
      else if (key == "data_seed") c.data_seed = value.get<std::uint64_t>();
      else if (key == "method") c.method = value.get<std::string>();
      else if (key == "n") c.n = value.get<int>();
      else if (key == "draws") c.draws = value.get<int>();
      else if (key == "warmup") c.warmup = value.get<int>();
      else if (key == "chains") c.chains = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "target_accept") c.target_accept = value.get<double>();
      else if (key == "max_tree_depth") c.max_tree_depth = value.get<int>();
      else if (key == "warm_start") c.warm_start = value.get<bool>();
      else if (key == "recover_latent") c.recover_latent = value.get<bool>();
      else if (key == "timing") c.timing = value.get<bool>();
      else if (key == "out") c.out = value.get<std::string>();
      else throw ConfigError("unknown config key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("not a number: '" + item + "'");
    }
  }
  return values;
}

std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string dataset_csv(const Dataset& d) {
  std::ostringstream os;
  for (std::size_t j = 0; j < d.columns.size(); ++j) os << (j ? "," : "") << d.columns[j];
  os << "\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < d.rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.rows.cols(); ++j) os << (j ? "," : "") << d.rows(i, j);
    os << "\n";
  }
  return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

ModelPtr build_model(const std::string& id, int size, std::uint64_t data_seed) {
  if (std::find(kModels.begin(), kModels.end(), id) == kModels.end()) {
    throw ConfigError("unknown model '" + id + "'");
  }
  try {
    return make_model(id, size < 0 ? default_size(id) : size, data_seed);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

Vector resolve_theta(const LatentGaussianModel& model, const std::string& text) {
  if (text.empty()) return model.initial_theta();
  const std::vector<double> v = parse_list(text);
  if (static_cast<int>(v.size()) != model.theta_dim()) {
    throw ConfigError("--theta needs " + std::to_string(model.theta_dim()) + " values for " + model.name());
  }
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// ---------------------------------------------------------------- sample

int cmd_sample(const SampleConfig& cfg, std::ostream& out) {
  // resolve and validate before doing any work
  const ModelPtr model = build_model(cfg.model, cfg.size, cfg.data_seed);
  if (std::find(kMethods.begin(), kMethods.end(), cfg.method) == kMethods.end()) {
    throw ConfigError("unknown method '" + cfg.method + "'");
  }
  const Method method = parse_method(cfg.method);
  if (cfg.n < 1) throw ConfigError("--n must be >= 1");
  if (cfg.draws < 1) throw ConfigError("--draws must be >= 1");
  if (cfg.warmup < 0) throw ConfigError("--warmup must be >= 0");
  if (cfg.chains < 1) throw ConfigError("--chains must be >= 1");
  if (!model->log_concave() && method != Method::Base) {
    throw ConfigError("method " + cfg.method + " needs a log-concave likelihood; " + cfg.model +
                      " supports only base");
  }
  EstimatorSpec spec;
  NutsConfig nuts;
  try {
    spec = EstimatorSpec::make(method, cfg.n, model->latent_dim(), cfg.seed);
    spec.validate(model->latent_dim());
    nuts.target_accept = cfg.target_accept;
    nuts.max_tree_depth = cfg.max_tree_depth;
    nuts.warmup_draws = cfg.warmup;
    nuts.main_draws = cfg.draws;
    nuts.seed = cfg.seed;
    nuts.warm_start = cfg.warm_start;
    nuts.recovery_thin = cfg.recover_latent && method != Method::Base ? 1 : 0;
    nuts.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  const Dataset data = model->dataset();
  const std::string data_text = dataset_csv(data);
  write_file(dir / "dataset.csv", data_text);

  const std::vector<ChainOutput> chains = run_chains(*model, spec, nuts, cfg.chains);

  const std::vector<std::string> names = model->parameter_names();
  std::ostringstream csv;
  csv << "draw,chain";
  for (const auto& n : names) csv << "," << n;
  csv << ",log_density,divergent,wall_time_s\n" << std::setprecision(17);
  int total_divergent = 0;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const ChainOutput& ch = chains[c];
    total_divergent += ch.n_divergent();
    for (int i = 0; i < ch.n_draws(); ++i) {
      csv << i << "," << c;
      for (Eigen::Index j = 0; j < ch.draws.cols(); ++j) csv << "," << ch.draws(i, j);
      csv << "," << ch.log_densities(i) << "," << int(ch.divergent[i]) << ","
          << (cfg.timing ? ch.wall_times(i) : 0.0) << "\n";
    }
  }
  write_file(dir / "draws.csv", csv.str());

  ordered_json recovery = nullptr;
  if (cfg.recover_latent) {
    std::ostringstream lat;
    lat << "draw,chain";
    for (int j = 0; j < model->latent_dim(); ++j) lat << ",z" << (j + 1);
    lat << "\n" << std::setprecision(17);
    bool exact = true;
    int rows = 0;
    std::vector<std::uint64_t> seeds;
    for (std::size_t c = 0; c < chains.size(); ++c) {
      std::vector<int> index;
      Matrix z;
      if (method == Method::Base) {
        z = recover_base(*model, chains[c]);
        index.resize(z.rows());
        for (int i = 0; i < z.rows(); ++i) index[i] = i;
      } else {
        const std::uint64_t s = cfg.seed + c + 0x5eedULL;
        seeds.push_back(s);
        RecoveredDraws r = recover_chain(chains[c], s);
        exact = exact && r.exact;
        z = std::move(r.z);
        index = std::move(r.draw_index);
      }
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        lat << index[i] << "," << c;
        for (Eigen::Index j = 0; j < z.cols(); ++j) lat << "," << z(i, j);
        lat << "\n";
        ++rows;
      }
    }
    write_file(dir / "latent.csv", lat.str());
    recovery = {{"file", "latent.csv"}, {"rows", rows}, {"exact", exact}, {"seeds", seeds}};
  }

  ordered_json manifest;
  manifest["tool"] = "adlis";
  manifest["version"] = kVersion;
  manifest["command"] = "sample";
  manifest["config"] = to_json(cfg);
  manifest["config"]["size"] = cfg.size < 0 ? default_size(cfg.model) : cfg.size;
  manifest["model"] = {{"name", model->name()},
                       {"theta_dim", model->theta_dim()},
                       {"latent_dim", model->latent_dim()},
                       {"parameters", names}};
  manifest["estimator"] = {{"method", to_string(method)}, {"n", spec.n}, {"aux_seed", spec.seed}};
  manifest["dataset"] = {{"file", "dataset.csv"},
                         {"rows", data.rows.rows()},
                         {"columns", data.columns},
                         {"fnv1a64", hex64(fnv1a(data_text))}};
  ordered_json chain_json = ordered_json::array();
  std::vector<std::uint64_t> seeds;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const ChainOutput& ch = chains[c];
    seeds.push_back(cfg.seed + c);
    ordered_json j{{"chain", c},
                   {"seed", cfg.seed + c},
                   {"draws", ch.n_draws()},
                   {"warmup", cfg.warmup},
                   {"divergences", ch.n_divergent()},
                   {"warmup_divergences", ch.warmup_divergences},
                   {"step_size", ch.step_size},
                   {"mean_accept_stat", ch.acceptance_stats.size() ? ch.acceptance_stats.mean() : 0.0},
                   {"gradient_evals", ch.counters.gradient_evals},
                   {"density_evals", ch.counters.density_evals},
                   {"trajectories", ch.counters.trajectories},
                   {"laplace_fits", ch.counters.laplace_fits},
                   {"wall_time_s", cfg.timing && ch.wall_times.size() ? ch.wall_times(ch.wall_times.size() - 1) : 0.0}};
    if (method == Method::Rqmc) j["mh_acceptance"] = ch.mh_acceptance;
    chain_json.push_back(j);
  }
  manifest["chain_seeds"] = seeds;
  manifest["chains"] = chain_json;
  manifest["totals"] = {{"draws", cfg.draws * cfg.chains}, {"divergences", total_divergent}};
  manifest["outputs"] = {{"draws", "draws.csv"}, {"dataset", "dataset.csv"}};
  if (!recovery.is_null()) manifest["outputs"]["latent"] = recovery;
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  out << "wrote " << (dir / "draws.csv").string() << ": " << cfg.chains << " chain(s) x " << cfg.draws
      << " draws, " << total_divergent << " divergence(s)\n";
  return kExitOk;
}

// ---------------------------------------------------------------- oracle

int cmd_oracle(const std::string& model_id, int size, std::uint64_t data_seed, const std::string& theta_text,
               const std::string& grid_text, int index, double tol, const std::string& out_path,
               std::ostream& out) {
  const ModelPtr model = build_model(model_id, size, data_seed);
  if (model->latent_dim() != 1) throw ConfigError(model_id + " does not have a 1-D latent field");
  if (!(tol > 0.0)) throw ConfigError("--tol must be positive");
  const Vector theta = resolve_theta(*model, theta_text);
  std::ostringstream csv;
  csv << std::setprecision(17);
  if (grid_text.empty()) {
    const QuadratureResult q = quadrature_marginal(*model, theta, tol);
    for (const auto& n : model->parameter_names()) csv << n << ",";
    csv << "log_joint\n";
    for (Eigen::Index j = 0; j < theta.size(); ++j) csv << theta(j) << ",";
    csv << q.log_value << "\n";
    out << "log pi(theta, y) = " << format_double(q.log_value) << "\n";
  } else {
    const std::vector<double> g = parse_list(grid_text);
    if (g.size() != 3 || g[2] < 2 || g[2] != std::floor(g[2]) || !(g[1] > g[0])) {
      throw ConfigError("--grid expects lo,hi,points with hi > lo and points >= 2");
    }
    if (index < 0 || index >= model->theta_dim()) throw ConfigError("--index out of range");
    const ThetaGrid grid = theta_posterior_grid(*model, theta, index, g[0], g[1], static_cast<int>(g[2]), tol);
    csv << model->parameter_names()[index] << ",log_joint,density,cdf\n";
    for (Eigen::Index i = 0; i < grid.theta.size(); ++i) {
      csv << grid.theta(i) << "," << grid.log_joint(i) << "," << grid.density(i) << "," << grid.cdf(i) << "\n";
    }
    out << "grid of " << grid.theta.size() << " points, integral " << format_double(grid.cdf(grid.cdf.size() - 1))
        << "\n";
  }
  write_file(out_path, csv.str());
  return kExitOk;
}

// ---------------------------------------------------------------- ugrid

int cmd_ugrid(const std::string& model_id, int size, std::uint64_t data_seed, const std::string& theta_text,
              int n, int grid_size, const std::string& out_path, std::ostream& out) {
  const ModelPtr model = build_model(model_id, size, data_seed);
  if (model->latent_dim() != 1) throw ConfigError(model_id + " does not have a 1-D latent field");
  if (n < 1) throw ConfigError("--n must be >= 1");
  if (grid_size < 3) throw ConfigError("--grid must be >= 3");
  const Vector theta = resolve_theta(*model, theta_text);
  const UGrid g = u_grid_scan(*model, theta, n, grid_size);
  std::ofstream f(out_path);
  if (!f) throw std::runtime_error("cannot write " + out_path);
  write_ugrid_csv(f, g);
  out << "jumps " << g.jumps.size() << "\n";
  out << "max_min_ratio " << format_double(g.max_min_ratio) << "\n";
  out << "locations";
  for (double u : g.jumps) out << " " << format_double(u);
  out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- diagnose

struct Run {
  std::vector<std::string> names;
  std::vector<ChainOutput> chains;
};

Run read_draws(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read draws file " + path);
  std::string line;
  if (!std::getline(f, line)) throw ConfigError(path + " is empty");
  const std::vector<std::string> header = split_csv_line(line);
  const std::size_t h = header.size();
  if (h < 6 || header[0] != "draw" || header[1] != "chain" || header[h - 3] != "log_density" ||
      header[h - 2] != "divergent" || header[h - 1] != "wall_time_s") {
    throw ConfigError(path + " is not a draws CSV");
  }
  Run run;
  run.names.assign(header.begin() + 2, header.end() - 3);
  const std::size_t p = run.names.size();
  std::map<int, std::vector<std::vector<double>>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != h) throw ConfigError(path + ": ragged row");
    std::vector<double> v(h);
    for (std::size_t j = 0; j < h; ++j) v[j] = parse_list(cells[j]).at(0);
    rows[static_cast<int>(v[1])].push_back(std::move(v));
  }
  for (auto& [chain, r] : rows) {
    ChainOutput c;
    c.names = run.names;
    const auto m = static_cast<Eigen::Index>(r.size());
    c.draws.resize(m, static_cast<Eigen::Index>(p));
    c.log_densities.resize(m);
    c.wall_times.resize(m);
    c.acceptance_stats = Vector::Zero(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < p; ++j) c.draws(i, static_cast<Eigen::Index>(j)) = r[i][j + 2];
      c.log_densities(i) = r[i][h - 3];
      c.divergent.push_back(static_cast<std::uint8_t>(r[i][h - 2] != 0.0));
      c.wall_times(i) = r[i][h - 1];
    }
    run.chains.push_back(std::move(c));
  }
  if (run.chains.empty()) throw ConfigError(path + " holds no draws");
  return run;
}

Vector read_truth(const std::string& path, const std::vector<std::string>& names) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read truth file " + path);
  std::string header_line, value_line;
  std::getline(f, header_line);
  std::getline(f, value_line);
  const std::vector<std::string> header = split_csv_line(header_line);
  const std::vector<std::string> values = split_csv_line(value_line);
  if (header.size() != values.size()) throw ConfigError(path + ": header and values differ in length");
  Vector truth(static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto it = std::find(header.begin(), header.end(), names[j]);
    if (it == header.end()) throw ConfigError(path + " has no value for " + names[j]);
    truth(static_cast<Eigen::Index>(j)) = parse_list(values[it - header.begin()]).at(0);
  }
  return truth;
}

int cmd_diagnose(const std::vector<std::string>& draw_files, const std::string& truth_path,
                 const std::string& out_dir, std::ostream& out) {
  if (draw_files.empty()) throw ConfigError("diagnose needs at least one --draws file");
  std::vector<Run> runs;
  for (const auto& p : draw_files) runs.push_back(read_draws(p));
  const fs::path dir(out_dir);
  fs::create_directories(dir);

  std::ostringstream ess_csv;
  ess_csv << "run,parameter,ess,ess_per_min,mean,mcse\n" << std::setprecision(10);
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (const EssRow& row : ess_summary(runs[r].chains)) {
      ess_csv << fs::path(draw_files[r]).parent_path().filename().string() << "/"
              << fs::path(draw_files[r]).filename().string() << "," << row.parameter << "," << row.ess << ","
              << row.ess_per_minute << "," << row.mean << "," << row.mcse << "\n";
    }
  }
  write_file(dir / "ess.csv", ess_csv.str());
  out << ess_csv.str();

  if (!truth_path.empty()) {
    for (std::size_t r = 0; r < runs.size(); ++r) {
      const Vector truth = read_truth(truth_path, runs[r].names);
      const Matrix trace = error_trace(concatenate(runs[r].chains), truth);
      std::ofstream f(dir / ("error_trace_" + std::to_string(r) + ".csv"));
      write_error_trace_csv(f, trace, runs[r].names);
      out << "run " << r << " final abs error";
      for (Eigen::Index j = 1; j < trace.cols(); ++j) out << " " << format_double(trace(trace.rows() - 1, j));
      out << "\n";
    }
  }
  return kExitOk;
}

}  // namespace

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"adlis: Laplace-based importance sampling for latent Gaussian models", "adlis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // sample
  SampleConfig flags;
  std::string config_path;
  bool no_timing = false;
  auto* sample = app.add_subcommand("sample", "run NUTS / MwG and write draws, dataset and manifest");
  std::map<std::string, CLI::Option*> given;
  given["model"] = sample->add_option("--model", flags.model, "gaussian|gaussian-sigma|gp-poisson|scalar-poisson|mixed-nb|simple-cauchy");
  given["size"] = sample->add_option("--size", flags.size, "model size (dimension, N or groups)");
  given["data_seed"] = sample->add_option("--data-seed", flags.data_seed, "seed of the synthetic data");
  given["method"] = sample->add_option("--method", flags.method, "base|adla|is|pm|qmc|rqmc");
  given["n"] = sample->add_option("--n", flags.n, "importance samples / lattice points");
  given["draws"] = sample->add_option("--draws", flags.draws, "post-warmup draws per chain");
  given["warmup"] = sample->add_option("--warmup", flags.warmup, "warmup iterations per chain");
  given["chains"] = sample->add_option("--chains", flags.chains, "number of chains");
  given["seed"] = sample->add_option("--seed", flags.seed, "base seed; chain c uses seed + c");
  given["target_accept"] = sample->add_option("--target-accept", flags.target_accept, "dual-averaging target");
  given["max_tree_depth"] = sample->add_option("--max-tree-depth", flags.max_tree_depth, "NUTS tree depth cap");
  given["warm_start"] = sample->add_flag("--warm-start", flags.warm_start, "warm-start Newton from the last mode");
  given["recover_latent"] = sample->add_flag("--recover-latent", flags.recover_latent, "write latent.csv");
  given["timing"] = sample->add_flag("--no-timing", no_timing, "write zero wall times (byte-stable output)");
  given["out"] = sample->add_option("--out", flags.out, "output directory");
  sample->add_option("--config", config_path, "JSON config; flags override it");

  // oracle / ugrid share model selection
  std::string o_model = "simple-cauchy", o_theta, o_grid, o_out = "oracle.csv";
  int o_size = -1, o_index = 0;
  std::uint64_t o_seed = 0;
  double o_tol = 1e-10;
  auto* oracle = app.add_subcommand("oracle", "quadrature marginal likelihood / theta posterior (1-D latent)");
  oracle->add_option("--model", o_model);
  oracle->add_option("--size", o_size);
  oracle->add_option("--data-seed", o_seed);
  oracle->add_option("--theta", o_theta, "comma-separated theta (default: prior median)");
  oracle->add_option("--grid", o_grid, "lo,hi,points over theta[--index]");
  oracle->add_option("--index", o_index, "theta coordinate varied by --grid");
  oracle->add_option("--tol", o_tol, "quadrature tolerance");
  oracle->add_option("--out", o_out, "output CSV");

  std::string u_model = "simple-cauchy", u_theta, u_out = "ugrid.csv";
  int u_size = -1, u_n = 4, u_grid = 5000;
  std::uint64_t u_seed = 0;
  auto* ugrid = app.add_subcommand("ugrid", "RQMC density over a grid of shifts U");
  ugrid->add_option("--model", u_model);
  ugrid->add_option("--size", u_size);
  ugrid->add_option("--data-seed", u_seed);
  ugrid->add_option("--theta", u_theta);
  ugrid->add_option("--n", u_n);
  ugrid->add_option("--grid", u_grid);
  ugrid->add_option("--out", u_out);

  std::vector<std::string> d_draws;
  std::string d_truth, d_out = "adlis-diagnose";
  auto* diagnose = app.add_subcommand("diagnose", "ESS table and running-mean error traces");
  diagnose->add_option("--draws", d_draws, "draws CSV (repeatable)")->required();
  diagnose->add_option("--truth", d_truth, "CSV with a header of parameter names and one row of values");
  diagnose->add_option("--out", d_out, "output directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  }
  flags.timing = !no_timing;

  try {
    if (sample->parsed()) {
      SampleConfig cfg;
      if (!config_path.empty()) {
        std::ifstream f(config_path);
        if (!f) throw ConfigError("cannot read config " + config_path);
        ordered_json j;
        try {
          j = ordered_json::parse(f);
        } catch (const nlohmann::json::exception& e) {
          throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        apply_json(cfg, j);
      }
      const ordered_json from_flags = to_json(flags);
      ordered_json overrides = ordered_json::object();
      for (const auto& [key, opt] : given) {
        if (opt->count() > 0) overrides[key] = from_flags[key];
      }
      apply_json(cfg, overrides);
      return cmd_sample(cfg, out);
    }
    if (oracle->parsed()) return cmd_oracle(o_model, o_size, o_seed, o_theta, o_grid, o_index, o_tol, o_out, out);
    if (ugrid->parsed()) return cmd_ugrid(u_model, u_size, u_seed, u_theta, u_n, u_grid, u_out, out);
    if (diagnose->parsed()) return cmd_diagnose(d_draws, d_truth, d_out, out);
  } catch (const ConfigError& e) {
    err << "error: invalid configuration: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitInvalidConfig;
}

}  // namespace adlis::cli
