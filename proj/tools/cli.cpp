#include "cli.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wobble/wobble.hpp"

namespace wobble::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct MeasureFlags {
  std::string dataset;
  std::string oracle;
  double sigma = 0.15;
  std::vector<double> sigma_list;
  std::size_t samples = 500;
  std::vector<std::size_t> samples_list;
  std::size_t points = 0;  // 0 = every point that passes the class filter
  long long class_filter = -1;
  std::uint64_t seed = kDefaultSeed;
  std::string clip = "none";
  std::string kind = "entropy";
  std::string prob_source = "top1_onehot";
  double c = kDefaultSmoothing;
  std::size_t jobs = 1;
  std::size_t max_batch = 256;
  std::string out;
  std::string label;
};

struct TestFlags {
  bool remove_outliers = false;
  std::string test = "all";
  std::size_t permutations = 0;
};

struct Invocation {
  std::string command;
  std::vector<std::string> argv;  // without the program name
  std::vector<std::string> inputs;
  json config = json::object();
};

std::chrono::milliseconds oracle_timeout() {
  if (const char* env = std::getenv("WOBBLE_TIMEOUT_SECS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const double secs = std::strtod(env, &end);
    if (end == env || *end != '\0' || !(secs > 0.0)) {
      fail(Errc::invalid_argument, "WOBBLE_TIMEOUT_SECS must be a positive number");
    }
    return std::chrono::milliseconds(static_cast<long long>(secs * 1000.0));
  }
  return kDefaultOracleTimeout;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

std::string sha256_file(const fs::path& path) {
  const auto data = read_text_file(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    fail(Errc::io_error, "sha256 failed for " + path.string());
  }
  std::ostringstream ss;
  for (unsigned i = 0; i < len; ++i) {
    ss << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return ss.str();
}

json digest_inputs(const std::vector<std::string>& inputs) {
  json out = json::array();
  for (const auto& p : inputs) {
    if (p.empty() || !fs::is_regular_file(p)) continue;
    out.push_back({{"path", p}, {"sha256", sha256_file(p)}});
  }
  return out;
}

void add_measure_flags(CLI::App* sub, MeasureFlags& f, bool sweep, std::size_t default_points) {
  f.points = default_points;
  sub->add_option("--dataset", f.dataset, "Dataset manifest (JSON)")->required();
  sub->add_option("--oracle", f.oracle, "Model manifest path | cmd:<command> | http:<url>")
      ->required();
  sub->add_option("--sigma", f.sigma, "Noise std-dev per input dimension")->capture_default_str();
  sub->add_option("--samples", f.samples, "Noise samples per point")->capture_default_str();
  if (sweep) {
    sub->add_option("--sigma-list", f.sigma_list, "Comma-separated sigma values")
        ->delimiter(',');
    sub->add_option("--samples-list", f.samples_list, "Comma-separated sample counts")
        ->delimiter(',');
  }
  sub->add_option("--points,--test-points", f.points, "Number of points (0 = all)")
      ->capture_default_str();
  sub->add_option("--class-filter", f.class_filter, "Only points with this label");
  sub->add_option("--seed", f.seed, "Noise seed")->capture_default_str();
  sub->add_option("--clip", f.clip, "none | unit_interval")->capture_default_str();
  sub->add_option("--kind", f.kind, "entropy | variance")->capture_default_str();
  sub->add_option("--prob-source", f.prob_source, "top1_onehot | soft")->capture_default_str();
  sub->add_option("--c", f.c, "Smoothing constant inside the logarithm")->capture_default_str();
  sub->add_option("--jobs", f.jobs, "Worker count")->capture_default_str();
  sub->add_option("--max-batch", f.max_batch, "Largest batch sent to the oracle")
      ->capture_default_str();
  sub->add_option("--out", f.out, "Output JSON path (stdout when omitted)");
  sub->add_option("--label", f.label, "Tag stored in the distribution meta");
}

void add_test_flags(CLI::App* sub, TestFlags& t) {
  sub->add_flag("--remove-outliers", t.remove_outliers, "Drop Tukey outliers before testing");
  sub->add_option("--test", t.test, "levene | fligner | ks | all")->capture_default_str();
  sub->add_option("--permutations", t.permutations,
                  "Use a permutation p-value with this many rounds (0 = analytic)")
      ->capture_default_str();
}

json config_of(const MeasureFlags& f) {
  return {{"dataset", f.dataset},
          {"oracle", f.oracle},
          {"sigma", f.sigma},
          {"sigma_list", f.sigma_list},
          {"samples", f.samples},
          {"samples_list", f.samples_list},
          {"points", f.points},
          {"class_filter", f.class_filter >= 0 ? json(f.class_filter) : json(nullptr)},
          {"seed", f.seed},
          {"clip", f.clip},
          {"kind", f.kind},
          {"prob_source", f.prob_source},
          {"c", f.c},
          {"jobs", f.jobs},
          {"max_batch", f.max_batch},
          {"out", f.out},
          {"label", f.label}};
}

json config_of(const TestFlags& t) {
  return {{"remove_outliers", t.remove_outliers},
          {"test", t.test},
          {"permutations", t.permutations}};
}

MeasureConfig measure_config(const MeasureFlags& f, double sigma, std::size_t samples) {
  MeasureConfig cfg;
  cfg.noise.sigma = sigma;
  cfg.noise.n_samples = samples;
  cfg.noise.seed = f.seed;
  cfg.noise.clip = parse_clip(f.clip);
  cfg.kind = parse_measure_kind(f.kind);
  cfg.prob_source = parse_prob_source(f.prob_source);
  cfg.c = f.c;
  validate(cfg);
  return cfg;
}

DetectOptions detect_options(const TestFlags& t) {
  DetectOptions opts;
  opts.remove_outliers = t.remove_outliers;
  opts.test_options.permutations = t.permutations;
  if (t.test != "all") opts.tests = {parse_test_kind(t.test)};
  return opts;
}

struct Selection {
  Matrix points;
  std::vector<std::uint64_t> ids;
  std::vector<std::uint32_t> labels;  // empty when the dataset has none
};

Selection select_points(const Dataset& ds, const MeasureFlags& f) {
  std::vector<std::size_t> rows;
  if (f.class_filter >= 0) {
    if (!ds.labels) fail(Errc::invalid_argument, "--class-filter needs a labelled dataset");
    rows = ds.indices_of_class(static_cast<std::uint32_t>(f.class_filter));
  } else {
    rows.resize(ds.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  }
  if (f.points > 0) {
    if (f.points > rows.size()) {
      fail(Errc::invalid_argument, "requested " + std::to_string(f.points) +
                                       " points but only " + std::to_string(rows.size()) +
                                       " are available");
    }
    rows.resize(f.points);
  }
  if (rows.empty()) fail(Errc::invalid_argument, "no points selected");
  Selection s;
  s.points = ds.inputs.select_rows(rows);
  s.ids.assign(rows.begin(), rows.end());
  if (ds.labels) {
    for (auto r : rows) s.labels.push_back((*ds.labels)[r]);
  }
  return s;
}

OracleFactory oracle_factory(const std::string& text, std::size_t max_batch) {
  return factory_for(parse_oracle_spec(text, max_batch, oracle_timeout()));
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

void write_manifest(const Invocation& inv, const std::string& out_path,
                    const std::string& started, std::uint64_t seed,
                    const std::vector<std::string>& outputs) {
  if (out_path.empty()) return;
  json m = {{"command", inv.command},
            {"argv", inv.argv},
            {"config", inv.config},
            {"seed", seed},
            {"tool_version", kToolVersion},
            {"started_at", started},
            {"finished_at", utc_now()},
            {"inputs", digest_inputs(inv.inputs)},
            {"outputs", outputs}};
  write_text_file(out_path + ".manifest.json", m.dump(2) + "\n");
}

int cmd_measure(Invocation& inv, const MeasureFlags& f, std::ostream& out) {
  const auto started = utc_now();
  inv.config = config_of(f);
  inv.inputs = {f.dataset, f.oracle};
  const auto ds = load_dataset(f.dataset);
  const auto sel = select_points(ds, f);
  const auto cfg = measure_config(f, f.sigma, f.samples);
  auto dist = measure_points(oracle_factory(f.oracle, f.max_batch), sel.points, cfg, f.jobs,
                             sel.ids);
  if (f.class_filter >= 0) dist.meta.class_filter = static_cast<std::uint32_t>(f.class_filter);
  dist.meta.label = f.label;

  emit(f.out, to_json(dist).dump(2) + "\n", out);
  std::vector<std::string> outputs;
  if (!f.out.empty()) {
    const auto box = boxplot_summary(dist.values);
    const auto csv_path = f.out + ".boxplot.csv";
    write_text_file(csv_path, boxplot_csv_header() + boxplot_csv_row(box, dist.values.size()));
    outputs = {f.out, csv_path};
  }
  write_manifest(inv, f.out, started, f.seed, outputs);
  return kSuccess;
}

int cmd_sweep(Invocation& inv, const MeasureFlags& f, std::ostream& out) {
  const auto started = utc_now();
  inv.config = config_of(f);
  inv.inputs = {f.dataset, f.oracle};
  const auto ds = load_dataset(f.dataset);
  const auto sel = select_points(ds, f);
  const auto sigmas = f.sigma_list.empty() ? std::vector<double>{f.sigma} : f.sigma_list;
  const auto counts =
      f.samples_list.empty() ? std::vector<std::size_t>{f.samples} : f.samples_list;
  const auto factory = oracle_factory(f.oracle, f.max_batch);

  json cells = json::array();
  std::string csv = "sigma,n_samples," + boxplot_csv_header();
  for (double sigma : sigmas) {
    for (std::size_t n : counts) {
      auto dist = measure_points(factory, sel.points, measure_config(f, sigma, n), f.jobs, sel.ids);
      if (f.class_filter >= 0) dist.meta.class_filter = static_cast<std::uint32_t>(f.class_filter);
      dist.meta.label = f.label;
      std::ostringstream prefix;
      prefix.precision(17);
      prefix << sigma << ',' << n << ',';
      csv += prefix.str() + boxplot_csv_row(boxplot_summary(dist.values), dist.values.size());
      cells.push_back({{"sigma", sigma}, {"n_samples", n}, {"distribution", to_json(dist)}});
    }
  }
  emit(f.out, json{{"cells", cells}}.dump(2) + "\n", out);
  std::vector<std::string> outputs;
  if (!f.out.empty()) {
    write_text_file(f.out + ".boxplot.csv", csv);
    outputs = {f.out, f.out + ".boxplot.csv"};
  }
  write_manifest(inv, f.out, started, f.seed, outputs);
  return kSuccess;
}

WobblinessDistribution read_distribution(const std::string& path) {
  try {
    return distribution_from_json(json::parse(read_text_file(path)));
  } catch (const json::exception& e) {
    fail(Errc::parse_error, path + ": " + e.what());
  }
}

int cmd_compare(Invocation& inv, const std::vector<std::string>& files, const TestFlags& t,
                const std::string& out_path, std::ostream& out) {
  const auto started = utc_now();
  inv.config = config_of(t);
  inv.config["files"] = files;
  inv.config["out"] = out_path;
  inv.inputs = files;
  const auto report = compare_distributions(read_distribution(files.at(0)),
                                            read_distribution(files.at(1)), detect_options(t));
  emit(out_path, to_json(report).dump(2) + "\n", out);
  write_manifest(inv, out_path, started, 0, out_path.empty() ? std::vector<std::string>{}
                                                             : std::vector<std::string>{out_path});
  return kSuccess;
}

int cmd_detect(Invocation& inv, const MeasureFlags& f, const TestFlags& t,
               const std::vector<std::string>& trigger_paths, std::ostream& out) {
  const auto started = utc_now();
  inv.config = config_of(f);
  inv.config["tests"] = config_of(t);
  inv.config["triggers"] = trigger_paths;
  inv.inputs = {f.dataset, f.oracle};
  inv.inputs.insert(inv.inputs.end(), trigger_paths.begin(), trigger_paths.end());

  const auto ds = load_dataset(f.dataset);
  const auto sel = select_points(ds, f);
  const auto cfg = measure_config(f, f.sigma, f.samples);
  const auto opts = detect_options(t);
  const auto factory = oracle_factory(f.oracle, f.max_batch);

  json reports = json::array();
  for (const auto& path : trigger_paths) {
    const auto trig = load_trigger(path);
    const auto report = backdoor_test(factory, sel.points, trig, cfg, opts, f.jobs);
    reports.push_back(to_json(report));
    if (!f.out.empty()) {
      out << "trigger " << trig.id << ":";
      for (const auto& r : report.results) out << ' ' << r.test_name << " p=" << r.p_value;
      out << '\n';
    }
  }
  emit(f.out, json{{"reports", reports}}.dump(2) + "\n", out);
  write_manifest(inv, f.out, started, f.seed,
                 f.out.empty() ? std::vector<std::string>{} : std::vector<std::string>{f.out});
  return kSuccess;
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

int cmd_battery(Invocation& inv, const std::string& manifest_path, const MeasureFlags& f,
                const TestFlags& t, std::ostream& out) {
  const auto started = utc_now();
  inv.config = config_of(f);
  inv.config["tests"] = config_of(t);
  inv.config["manifest"] = manifest_path;
  inv.inputs = {manifest_path, f.dataset};

  json m;
  try {
    m = json::parse(read_text_file(manifest_path));
  } catch (const json::exception& e) {
    fail(Errc::parse_error, manifest_path + ": " + e.what());
  }
  if (!m.is_object() || !m.contains("networks") || !m.contains("triggers")) {
    fail(Errc::parse_error, manifest_path + ": expected {\"networks\":[...],\"triggers\":[...]}");
  }
  const auto base = fs::path(manifest_path).parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return (path.is_absolute() ? path : base / path).string();
  };

  std::vector<TriggerSpec> triggers;
  for (const auto& jt : m["triggers"]) triggers.push_back(load_trigger(resolve(jt.get<std::string>())));

  std::vector<BatteryNetwork> networks;
  std::size_t index = 0;
  for (const auto& jn : m["networks"]) {
    BatteryNetwork net;
    auto spec_text = jn.at("spec").get<std::string>();
    auto spec = parse_oracle_spec(spec_text, f.max_batch, oracle_timeout());
    if (auto* model = std::get_if<InProcessModel>(&spec.transport)) {
      model->model_path = resolve(model->model_path.string());
    }
    net.id = jn.value("id", "net" + std::to_string(index));
    net.description = describe(spec);
    net.poisoned = jn.at("poisoned").get<bool>();
    if (jn.contains("implanted")) {
      for (const auto& ji : jn["implanted"]) net.implanted.push_back(stem_of(ji.get<std::string>()));
    }
    // Open lazily so an unreachable network only fails its own cells.
    net.open = [spec] { return open_oracle(spec); };
    networks.push_back(std::move(net));
    ++index;
  }

  const auto ds = load_dataset(f.dataset);
  const auto sel = select_points(ds, f);
  const auto result = run_battery(networks, triggers, sel.points,
                                  measure_config(f, f.sigma, f.samples), detect_options(t), f.jobs);

  emit(f.out, to_json(result).dump(2) + "\n", out);
  std::vector<std::string> outputs;
  if (!f.out.empty()) {
    std::string csv = "test,threshold,fpr,tpr\n";
    for (const auto& [name, roc] : result.roc) {
      std::istringstream rows(roc_to_csv(roc));
      std::string line;
      std::getline(rows, line);  // header
      while (std::getline(rows, line)) csv += name + "," + line + "\n";
    }
    write_text_file(f.out + ".roc.csv", csv);
    outputs = {f.out, f.out + ".roc.csv"};
    for (const auto& [name, roc] : result.roc) out << name << " AUC=" << roc.auc << '\n';
    for (const auto& cell : result.cells) {
      if (cell.failed) out << "failed: " << cell.error << '\n';
    }
  }
  write_manifest(inv, f.out, started, f.seed, outputs);
  return kSuccess;
}

std::vector<std::string> replace_out(std::vector<std::string> argv, const std::string& out_path) {
  bool replaced = false;
  for (std::size_t i = 0; i < argv.size(); ++i) {
    if (argv[i] == "--out" && i + 1 < argv.size()) {
      argv[i + 1] = out_path;
      replaced = true;
    } else if (argv[i].starts_with("--out=")) {
      argv[i] = "--out=" + out_path;
      replaced = true;
    }
  }
  if (!replaced) {
    argv.push_back("--out");
    argv.push_back(out_path);
  }
  return argv;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Local wobbliness measurement and backdoor detection for black-box classifiers",
               "wobble"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  MeasureFlags mf, sf, df, bf;
  TestFlags ct, dt, bt;
  std::vector<std::string> compare_files;
  std::string compare_out;
  std::vector<std::string> trigger_paths;
  std::string battery_manifest;
  std::string rerun_manifest;
  std::string rerun_out;

  auto* measure = app.add_subcommand("measure", "Measure W over dataset points");
  add_measure_flags(measure, mf, false, 0);

  auto* sweep = app.add_subcommand("sweep", "Measure W over a grid of sigma and sample counts");
  add_measure_flags(sweep, sf, true, 0);

  auto* compare = app.add_subcommand("compare", "Compare two distribution files");
  compare->add_option("files", compare_files, "Two distribution JSON files")
      ->required()
      ->expected(2);
  add_test_flags(compare, ct);
  compare->add_option("--out", compare_out, "Output JSON path (stdout when omitted)");

  auto* detect = app.add_subcommand("detect", "Test candidate triggers for backdoor behaviour");
  add_measure_flags(detect, df, false, 25);
  add_test_flags(detect, dt);
  detect->add_option("--trigger", trigger_paths, "Trigger manifest (repeatable)")->required();

  auto* battery = app.add_subcommand("battery", "Networks x triggers detection battery with ROC");
  add_measure_flags(battery, bf, false, 25);
  battery->remove_option(battery->get_option("--oracle"));
  add_test_flags(battery, bt);
  battery->add_option("--manifest", battery_manifest, "Battery manifest (JSON)")->required();

  auto* rerun = app.add_subcommand("rerun", "Re-execute the run recorded in a manifest");
  rerun->add_option("manifest", rerun_manifest, "A *.manifest.json file")->required();
  rerun->add_option("--out", rerun_out, "Write to this path instead of the recorded one");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsageError;
  }

  Invocation inv;
  inv.argv.assign(args.begin() + (args.empty() ? 0 : 1), args.end());
  try {
    if (*measure) {
      inv.command = "measure";
      return cmd_measure(inv, mf, out);
    }
    if (*sweep) {
      inv.command = "sweep";
      return cmd_sweep(inv, sf, out);
    }
    if (*compare) {
      inv.command = "compare";
      return cmd_compare(inv, compare_files, ct, compare_out, out);
    }
    if (*detect) {
      inv.command = "detect";
      return cmd_detect(inv, df, dt, trigger_paths, out);
    }
    if (*battery) {
      inv.command = "battery";
      return cmd_battery(inv, battery_manifest, bf, bt, out);
    }
    if (*rerun) {
      json m = json::parse(read_text_file(rerun_manifest));
      auto recorded = m.at("argv").get<std::vector<std::string>>();
      for (const auto& input : m.value("inputs", json::array())) {
        const auto path = input.at("path").get<std::string>();
        if (!fs::is_regular_file(path) || sha256_file(path) != input.at("sha256").get<std::string>()) {
          err << "warning: input changed since the recorded run: " << path << '\n';
        }
      }
      if (!rerun_out.empty()) recorded = replace_out(std::move(recorded), rerun_out);
      recorded.insert(recorded.begin(), args.empty() ? std::string("wobble") : args.front());
      return run(recorded, out, err);
    }
  } catch (const MeasureAborted& e) {
    err << "error: measurement aborted at " << e.what() << '\n';
    return kRuntimeFailure;
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return kRuntimeFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kUsageError;
}

}  // namespace wobble::cli
