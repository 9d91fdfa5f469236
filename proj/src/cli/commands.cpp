#include "deft/cli/commands.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "deft/core/errors.hpp"
#include "deft/data/folder.hpp"
#include "deft/metrics/evaluate.hpp"
#include "deft/model/checkpoint.hpp"

namespace deft {

namespace fs = std::filesystem;

namespace {

std::vector<Sample> load_source(const std::string& dir, const SynthSpec& spec) {
  if (dir.empty()) return synth_generate(spec);
  auto ds = load_dataset_dir(dir);
  if (ds.samples.empty()) throw IoError("no usable image/mask pairs in " + dir);
  return std::move(ds.samples);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

DefTModel initial_model(const RunConfig& cfg, const ModelConfig& model) {
  if (cfg.init_checkpoint.empty()) return DefTModel(model, cfg.train.seed);
  DefTModel m = load_checkpoint(cfg.init_checkpoint);
  if (!(m.config() == model)) {
    throw ConfigError("init_checkpoint " + cfg.init_checkpoint + " was saved with a different model config");
  }
  return m;
}

std::string toggle_string(const BlockToggles& t) {
  auto b = [](bool v) { return v ? "1" : "0"; };
  return std::string("csb=") + b(t.use_csb) + " pab=" + b(t.use_pab) + " lpb=" + b(t.use_lpb) +
         " lmps=" + b(t.use_lmps) + " cffn=" + b(t.use_cffn);
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const IoError*>(&e)) return kExitIo;
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return kExitIo;
  return kExitUsage;
}

std::vector<Sample> load_train_data(const DataConfig& data) { return load_source(data.train_dir, data.synth); }
std::vector<Sample> load_eval_data(const DataConfig& data) { return load_source(data.eval_dir, data.eval_synth); }

void cmd_synth(const SynthSpec& spec, const fs::path& out_dir) {
  spec.validate();
  ensure_dir(out_dir);
  save_dataset(out_dir, synth_generate(spec));
}

TrainArtifacts cmd_train(const RunConfig& cfg, std::ostream* progress, int log_every) {
  cfg.validate();
  const fs::path out = cfg.output_dir;
  ensure_dir(out);
  auto data = load_train_data(cfg.data);
  DefTModel model = initial_model(cfg, cfg.model);
  save_run_config(out / "run_config.txt", cfg);

  TrainHooks hooks;
  if (progress && log_every > 0) {
    hooks.on_iteration = [&](const LossRecord& r) {
      if (r.iteration % log_every) return;
      *progress << "iter " << r.iteration << " epoch " << r.epoch << " lr " << r.lr << " loss " << r.total
                << " (bce " << r.bce << " ssim " << r.ssim << " iou " << r.iou << ")\n";
    };
  }
  if (cfg.train.checkpoint_every > 0) {
    ensure_dir(out / "checkpoints");
    hooks.on_checkpoint = [&](std::int64_t it, const DefTModel& m) {
      save_checkpoint(out / "checkpoints" / ("iter_" + std::to_string(it) + ".ckpt"), m);
    };
  }

  TrainArtifacts art;
  art.result = train(model, data, cfg.train, hooks);
  art.checkpoint = out / "model.ckpt";
  art.loss_csv = out / "loss.csv";
  save_checkpoint(art.checkpoint, model);
  write_loss_log(art.loss_csv, art.result.log);
  return art;
}

MetricsReport cmd_eval(const fs::path& checkpoint, const std::vector<Sample>& data, const EvalOptions& opt,
                       const fs::path& out_dir) {
  if (!fs::exists(checkpoint)) throw IoError("checkpoint not found: " + checkpoint.string());
  DefTModel model = load_checkpoint(checkpoint);
  MetricsReport r = evaluate(model, data, opt);
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    write_report_json(out_dir / "metrics.json", r);
    if (!r.curves.empty()) write_curves_csv(out_dir / "curves.csv", r.curves);
  }
  return r;
}

MetricsReport cmd_eval(const RunConfig& cfg) {
  cfg.validate();
  const fs::path ckpt = cfg.eval_checkpoint.empty() ? fs::path(cfg.output_dir) / "model.ckpt"
                                                    : fs::path(cfg.eval_checkpoint);
  // check before generating data so a typo fails fast
  if (!fs::exists(ckpt)) throw IoError("checkpoint not found: " + ckpt.string());
  return cmd_eval(ckpt, load_eval_data(cfg.data), cfg.eval, cfg.output_dir);
}

std::vector<GradCheckCase> cmd_gradcheck(const std::string& scope, std::uint64_t seed, std::ostream& out,
                                         const fs::path& out_dir) {
  auto cases = run_gradcheck_suite(scope, seed);
  char line[160];
  std::snprintf(line, sizeof(line), "%-6s %-28s %12s %10s  %s\n", "scope", "case", "max_rel_err", "tol", "result");
  out << line;
  for (const auto& c : cases) {
    std::snprintf(line, sizeof(line), "%-6s %-28s %12.3e %10.0e  %s\n", c.scope.c_str(), c.name.c_str(),
                  c.result.max_rel_error, c.tolerance, c.passed() ? "PASS" : "FAIL");
    out << line;
  }
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    std::ofstream csv(out_dir / "gradcheck.csv");
    csv << "scope,case,max_rel_error,tolerance,passed\n" << std::setprecision(17);
    for (const auto& c : cases) {
      csv << c.scope << ',' << c.name << ',' << c.result.max_rel_error << ',' << c.tolerance << ','
          << (c.passed() ? 1 : 0) << '\n';
    }
    if (!csv) throw IoError("cannot write gradcheck.csv");
  }
  return cases;
}

ParamsReport cmd_params(const ModelConfig& cfg, int flops_input_size, std::ostream& out, const fs::path& out_dir) {
  cfg.validate();
  DefTModel model(cfg, 0);
  ParamsReport r;
  r.total = model.param_count();
  r.breakdown = model.param_breakdown();
  r.flops_input_size = flops_input_size;
  if (flops_input_size > 0) r.flops = estimate_flops(model, flops_input_size);

  for (const auto& [name, n] : r.breakdown) out << std::left << std::setw(16) << name << n << '\n';
  char line[128];
  std::snprintf(line, sizeof(line), "total %lld (%.2fM)\n", static_cast<long long>(r.total), r.total / 1e6);
  out << line;
  if (r.flops > 0) {
    std::snprintf(line, sizeof(line), "flops at %dx%d: %.2fG (reference 8.72G)\n", flops_input_size,
                  flops_input_size, r.flops / 1e9);
    out << line;
  }
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    std::ofstream csv(out_dir / "params.csv");
    csv << "module,params\n";
    for (const auto& [name, n] : r.breakdown) csv << name << ',' << n << '\n';
    csv << "total," << r.total << '\n';
    if (r.flops > 0) csv << "flops@" << flops_input_size << ',' << r.flops << '\n';
    if (!csv) throw IoError("cannot write params.csv");
  }
  return r;
}

std::vector<std::pair<std::string, BlockToggles>> ablation_variants(const BlockToggles& base,
                                                                    const std::string& toggle_list) {
  struct Entry {
    const char* key;
    const char* label;
    bool BlockToggles::*member;
  };
  static const Entry order[] = {{"csb", "+CSB", &BlockToggles::use_csb},
                                {"pab", "+PAB", &BlockToggles::use_pab},
                                {"lpb", "+LPB", &BlockToggles::use_lpb},
                                {"lmps", "+LMPS", &BlockToggles::use_lmps},
                                {"cffn", "+CFFN", &BlockToggles::use_cffn}};
  std::vector<std::string> wanted;
  for (std::size_t start = 0; start <= toggle_list.size();) {
    auto comma = toggle_list.find(',', start);
    if (comma == std::string::npos) comma = toggle_list.size();
    std::string item = toggle_list.substr(start, comma - start);
    std::erase(item, ' ');
    if (!item.empty()) wanted.push_back(item);
    start = comma + 1;
  }
  std::vector<const Entry*> chosen;
  for (const auto& w : wanted) {
    const Entry* hit = nullptr;
    for (const auto& e : order)
      if (w == e.key) hit = &e;
    if (!hit) throw ConfigError("unknown ablation toggle '" + w + "'");
    for (const Entry* c : chosen)
      if (c == hit) throw ConfigError("ablation toggle '" + w + "' listed twice");
    chosen.push_back(hit);
  }
  if (chosen.empty()) throw ConfigError("ablate.toggles is empty");

  BlockToggles t = base;
  for (const auto& e : order)
    for (const Entry* c : chosen)
      if (c == &e) t.*(e.member) = false;
  std::vector<std::pair<std::string, BlockToggles>> out{{"Baseline", t}};
  for (const auto& e : order) {
    bool listed = false;
    for (const Entry* c : chosen) listed |= c == &e;
    if (!listed) continue;
    t.*(e.member) = true;
    out.emplace_back(e.label, t);
  }
  out.back().first += " (full)";
  return out;
}

std::vector<AblationRow> cmd_ablate(const RunConfig& cfg, std::ostream* progress) {
  cfg.validate();
  const auto variants = ablation_variants(cfg.model.toggles, cfg.ablate_toggles);
  const fs::path out = cfg.output_dir;
  ensure_dir(out / "ablate");
  const auto train_data = load_train_data(cfg.data);
  const auto eval_data = load_eval_data(cfg.data);

  std::vector<AblationRow> rows;
  for (std::size_t k = 0; k < variants.size(); ++k) {
    ModelConfig mc = cfg.model;
    mc.toggles = variants[k].second;
    DefTModel model(mc, cfg.train.seed);
    AblationRow row;
    row.name = variants[k].first;
    row.toggles = mc.toggles;
    row.params = model.param_count();
    const auto result = train(model, train_data, cfg.train);
    row.checkpoint = out / "ablate" / (std::to_string(k) + ".ckpt");
    save_checkpoint(row.checkpoint, model);
    row.report = evaluate(model, eval_data, cfg.eval);
    if (progress) {
      *progress << row.name << ": " << toggle_string(row.toggles) << " params " << row.params << " final loss "
                << (result.log.empty() ? 0.0 : result.log.back().total) << " mae " << row.report.mae << " f1 "
                << row.report.f1 << '\n';
    }
    rows.push_back(std::move(row));
  }

  std::ofstream csv(out / "ablation.csv");
  csv << "config,params,fpr,fnr,acc,f1,mae\n" << std::setprecision(17);
  for (const auto& r : rows) {
    csv << r.name << ',' << r.params << ',' << r.report.fpr << ',' << r.report.fnr << ',' << r.report.acc << ','
        << r.report.f1 << ',' << r.report.mae << '\n';
  }
  if (!csv) throw IoError("cannot write ablation.csv");
  return rows;
}

}  // namespace deft
