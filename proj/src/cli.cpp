#include "qoe/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "qoe/config.hpp"
#include "qoe/error.hpp"
#include "qoe/experiment.hpp"

namespace qoe {

namespace {

namespace fs = std::filesystem;

struct CommonFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> config;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonFlags& f, const std::string& out_help) {
  cmd->add_option("--seed", f.seed, "seed; overrides every seed in the config");
  cmd->add_option("--config", f.config, "key = value config file");
  cmd->add_option("--out", f.out, out_help);
}

ExperimentConfig resolve_config(const CommonFlags& f) {
  KeyValueConfig kv;
  if (f.config) kv = KeyValueConfig::load(*f.config);
  std::optional<std::uint64_t> override_seed = f.seed;
  if (!override_seed && !kv.get("experiment.seed")) override_seed = seed_from_environment();
  ExperimentConfig cfg = experiment_from_config(kv, override_seed);
  if (f.seed) cfg.data.seed = cfg.augmentation.seed = cfg.split.seed = *f.seed;
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  os << text;
  os.flush();
  if (!os) fail(ErrorKind::io, "write to '" + path.string() + "' failed");
}

void emit(const std::string& text, const std::optional<std::string>& path, std::ostream& out) {
  if (path)
    write_text(*path, text);
  else
    out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ModelKind model_or_fail(const std::string& name) {
  auto kind = parse_model_kind(name);
  if (!kind) fail(ErrorKind::invalid_argument, "unknown model '" + name + "'");
  return *kind;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Demographic QoE augmentation and MOS regression experiments", "qoe-forge"};
  app.require_subcommand(1);

  CommonFlags gen_f, aug_f, split_f, train_f, eval_f, cmp_f, corr_f, sc_f;
  std::optional<std::size_t> gen_n;
  auto* gen = app.add_subcommand("generate", "write a synthetic base session CSV");
  add_common(gen, gen_f, "output CSV (stdout when omitted)");
  gen->add_option("--n", gen_n, "number of sessions");

  std::string aug_in;
  auto* aug = app.add_subcommand("augment", "expand a base CSV into one row per demographic profile");
  add_common(aug, aug_f, "output CSV (stdout when omitted)");
  aug->add_option("--in", aug_in, "base session CSV")->required();

  std::string split_in;
  std::optional<double> split_fraction;
  std::optional<std::string> split_mode;
  auto* spl = app.add_subcommand("split", "write train.csv and test.csv into the --out directory");
  add_common(spl, split_f, "output directory");
  spl->add_option("--in", split_in, "input CSV")->required();
  spl->add_option("--test-fraction", split_fraction, "held-out fraction");
  spl->add_option("--mode", split_mode, "grouped_by_session or iid");

  std::string train_in, train_model;
  bool train_exclude = false;
  auto* trn = app.add_subcommand("train", "fit preprocessing and one model, write a pipeline JSON");
  add_common(trn, train_f, "pipeline JSON (stdout when omitted)");
  trn->add_option("--in", train_in, "training CSV")->required();
  trn->add_option("--model", train_model, "model id")->required();
  trn->add_flag("--exclude-demographic-feature", train_exclude, "do not encode the demographic label");

  std::string eval_in, eval_pipeline;
  std::optional<std::string> eval_predictions;
  auto* evl = app.add_subcommand("evaluate", "score a trained pipeline on a CSV");
  add_common(evl, eval_f, "metrics JSON (stdout when omitted)");
  evl->add_option("--in", eval_in, "test CSV")->required();
  evl->add_option("--pipeline", eval_pipeline, "pipeline JSON from `train`")->required();
  evl->add_option("--predictions", eval_predictions, "also write mos_true,mos_pred CSV here");

  std::optional<std::string> cmp_in, cmp_csv, cmp_roster;
  std::optional<std::size_t> cmp_n;
  bool cmp_exclude = false, cmp_timing = false;
  auto* cmp = app.add_subcommand("compare", "train every roster model on base and augmented data");
  add_common(cmp, cmp_f, "report JSON (stdout when omitted)");
  cmp->add_option("--in", cmp_in, "base session CSV instead of the generator");
  cmp->add_option("--n", cmp_n, "generated base sessions");
  cmp->add_option("--roster", cmp_roster, "comma-separated model ids");
  cmp->add_option("--csv", cmp_csv, "also write the comparison table as CSV");
  cmp->add_flag("--exclude-demographic-feature", cmp_exclude, "do not encode the demographic label");
  cmp->add_flag("--record-timing", cmp_timing, "add wall-clock seconds per model run");

  std::string corr_in, corr_feature;
  auto* cor = app.add_subcommand("correlate", "per-demographic PLCC between a column and MOS");
  add_common(cor, corr_f, "output CSV (stdout when omitted)");
  cor->add_option("--in", corr_in, "augmented CSV")->required();
  cor->add_option("--feature", corr_feature, "numeric column")->required();

  std::string sc_model;
  std::optional<std::string> sc_in;
  std::optional<std::size_t> sc_n;
  bool sc_base = false, sc_train = false, sc_exclude = false;
  auto* sct = app.add_subcommand("scatter", "true vs predicted MOS for one model");
  add_common(sct, sc_f, "output CSV (stdout when omitted)");
  sct->add_option("--model", sc_model, "model id")->required();
  sct->add_option("--in", sc_in, "base session CSV instead of the generator");
  sct->add_option("--n", sc_n, "generated base sessions");
  sct->add_flag("--base", sc_base, "use the base run instead of the augmented one");
  sct->add_flag("--on-train", sc_train, "predict the training split instead of the test split");
  sct->add_flag("--exclude-demographic-feature", sc_exclude, "do not encode the demographic label");

  std::vector<const char*> argv{"qoe-forge"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      ExperimentConfig cfg = resolve_config(gen_f);
      if (gen_n) cfg.data.n = *gen_n;
      emit(to_csv_string(generate_base_dataset(cfg.data.n, cfg.data.seed)), gen_f.out, out);
    } else if (aug->parsed()) {
      const ExperimentConfig cfg = resolve_config(aug_f);
      emit(to_csv_string(augment_dataset(read_csv(aug_in), cfg.augmentation)), aug_f.out, out);
    } else if (spl->parsed()) {
      ExperimentConfig cfg = resolve_config(split_f);
      if (split_fraction) cfg.split.test_fraction = *split_fraction;
      if (split_mode) {
        auto m = parse_split_mode(*split_mode);
        if (!m) fail(ErrorKind::invalid_argument, "unknown split mode '" + *split_mode + "'");
        cfg.split.mode = *m;
      }
      if (!split_f.out) fail(ErrorKind::invalid_argument, "split needs --out <directory>");
      const Split s = split(read_csv(split_in), cfg.split);
      const fs::path dir(*split_f.out);
      std::error_code ec;
      fs::create_directories(dir, ec);
      if (ec) fail(ErrorKind::io, "cannot create directory '" + dir.string() + "'");
      write_csv(s.train, dir / "train.csv");
      write_csv(s.test, dir / "test.csv");
    } else if (trn->parsed()) {
      const ExperimentConfig cfg = resolve_config(train_f);
      const ModelKind kind = model_or_fail(train_model);
      const Dataset data = read_csv(train_in);
      const auto pipeline = train_pipeline(data, kind, cfg.params, model_seed(cfg.seed, kind),
                                           {cfg.include_demographic && !train_exclude});
      emit(to_json(pipeline).dump(2) + "\n", train_f.out, out);
    } else if (evl->parsed()) {
      resolve_config(eval_f);
      Json doc;
      try {
        doc = Json::parse(read_text(eval_pipeline));
      } catch (const Json::exception& e) {
        fail(ErrorKind::parse, "'" + eval_pipeline + "': " + e.what());
      }
      const TrainedPipeline pipeline = pipeline_from_json(doc);
      const auto design = transform(read_csv(eval_in), pipeline.preprocessor);
      for (const auto& w : design.warnings) err << "warning: " << w << "\n";
      const auto pred = pipeline.model.predict(design.x);
      emit(to_json(evaluate_predictions(design.y, pred)).dump(2) + "\n", eval_f.out, out);
      if (eval_predictions) emit(ScatterExport{design.y, pred}.to_csv(), eval_predictions, out);
    } else if (cmp->parsed()) {
      ExperimentConfig cfg = resolve_config(cmp_f);
      if (cmp_in) cfg.data.path = *cmp_in;
      if (cmp_n) cfg.data.n = *cmp_n;
      if (cmp_exclude) cfg.include_demographic = false;
      if (cmp_timing) cfg.record_timing = true;
      if (cmp_roster) {
        KeyValueConfig kv;
        kv.set("experiment.roster", *cmp_roster);
        cfg.roster = experiment_from_config(kv).roster;
      }
      const ComparisonReport report = run_compare(cfg);
      emit(to_json(report).dump(2) + "\n", cmp_f.out, out);
      if (cmp_csv) write_text(*cmp_csv, comparison_csv(report));
    } else if (cor->parsed()) {
      resolve_config(corr_f);
      std::ostringstream os;
      os << "demographic,n,plcc\n";
      for (const auto& g : correlation_by_demographic(read_csv(corr_in), corr_feature))
        os << g.demographic << ',' << g.n << ',' << num(g.plcc) << '\n';
      emit(os.str(), corr_f.out, out);
    } else if (sct->parsed()) {
      ExperimentConfig cfg = resolve_config(sc_f);
      if (sc_in) cfg.data.path = *sc_in;
      if (sc_n) cfg.data.n = *sc_n;
      if (sc_exclude) cfg.include_demographic = false;
      const ScatterOptions opts{model_or_fail(sc_model), !sc_base, sc_train};
      emit(run_scatter_export(cfg, opts).to_csv(), sc_f.out, out);
    }
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return e.kind() == ErrorKind::io ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace qoe
