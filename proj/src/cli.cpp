#include "egpd/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "egpd/diagnostics.hpp"
#include "egpd/error.hpp"
#include "egpd/fitter.hpp"
#include "egpd/model_io.hpp"
#include "egpd/random.hpp"

namespace egpd {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) throw ConfigError("config: unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& target) {
  if (obj.contains(key)) target = obj.at(key).get<T>();
}

std::string column_key(const json& v) {
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  return v.get<std::string>();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// Flag > environment > config file.
fs::path output_dir(RunConfig& config, const CLI::Option* flag) {
  if (!flag->count()) {
    if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
      config.output_dir = env;
    }
  }
  fs::path dir(config.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

std::string sanitize(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    if (c == '/' || c == '\\' || c == ' ') c = '_';
  }
  return out;
}

}  // namespace

json config_to_json(const RunConfig& c) {
  json links = json::object();
  for (const auto& [k, v] : c.links) links[k] = v;
  json init = json::object();
  for (const auto& [k, v] : c.control.init) init[k] = v;
  return {
      {"inputs", c.inputs},
      {"format",
       {{"delimiter", std::string(1, c.format.delimiter)},
        {"header", c.format.header},
        {"columns",
         {{"station_id", c.format.station},
          {"lon", c.format.lon},
          {"lat", c.format.lat},
          {"timestamp", c.format.time},
          {"precip", c.format.precip}}},
        {"time_format", c.format.time_format},
        {"bad_row_tolerance", c.format.bad_row_tolerance},
        {"resolution_minutes", c.resolution_minutes}}},
      {"prepare",
       {{"censor", c.prepare.censor},
        {"stride", c.prepare.stride},
        {"train_fraction", c.train_fraction},
        {"seed", c.seed}}},
      {"data", {{"train", c.train}, {"validation", c.validation}}},
      {"models",
       {{"families", c.families},
        {"variations", c.variations},
        {"links", links},
        {"time_covariate", c.grid.time_covariate},
        {"period", c.grid.period},
        {"cyclic_dim", c.grid.cyclic_dim},
        {"lon", c.grid.lon},
        {"lat", c.grid.lat},
        {"thinplate_dim", c.grid.thinplate_dim},
        {"lambda", c.grid.lambda ? json(*c.grid.lambda) : json(nullptr)}}},
      {"control",
       {{"n_cyc", c.control.n_cyc},
        {"step", c.control.step},
        {"autostep", c.control.autostep},
        {"tolerance", c.control.tolerance},
        {"select_lambda", c.control.select_lambda},
        {"log10_lambda_min", c.control.log10_lambda_min},
        {"log10_lambda_max", c.control.log10_lambda_max},
        {"curvature_floor", c.control.curvature_floor},
        {"max_rejections", c.control.max_rejections},
        {"joint_phase", c.control.joint_phase},
        {"init", init}}},
      {"output_dir", c.output_dir}};
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  try {
    check_keys(j, {"inputs", "format", "prepare", "data", "models", "control", "output_dir"},
               "config");
    read(j, "inputs", c.inputs);
    read(j, "output_dir", c.output_dir);
    if (j.contains("format")) {
      const json& f = j.at("format");
      check_keys(f, {"delimiter", "header", "columns", "time_format", "bad_row_tolerance",
                     "resolution_minutes"},
                 "format");
      if (f.contains("delimiter")) {
        const auto d = f.at("delimiter").get<std::string>();
        if (d.size() != 1) throw ConfigError("config: delimiter must be a single character");
        c.format.delimiter = d[0];
      }
      read(f, "header", c.format.header);
      read(f, "time_format", c.format.time_format);
      read(f, "bad_row_tolerance", c.format.bad_row_tolerance);
      read(f, "resolution_minutes", c.resolution_minutes);
      if (f.contains("columns")) {
        const json& cols = f.at("columns");
        check_keys(cols, {"station_id", "lon", "lat", "timestamp", "precip"}, "format.columns");
        if (cols.contains("station_id")) c.format.station = column_key(cols.at("station_id"));
        if (cols.contains("lon")) c.format.lon = column_key(cols.at("lon"));
        if (cols.contains("lat")) c.format.lat = column_key(cols.at("lat"));
        if (cols.contains("timestamp")) c.format.time = column_key(cols.at("timestamp"));
        if (cols.contains("precip")) c.format.precip = column_key(cols.at("precip"));
      }
    }
    if (j.contains("prepare")) {
      const json& p = j.at("prepare");
      check_keys(p, {"censor", "stride", "train_fraction", "seed"}, "prepare");
      read(p, "censor", c.prepare.censor);
      read(p, "stride", c.prepare.stride);
      read(p, "train_fraction", c.train_fraction);
      read(p, "seed", c.seed);
    }
    if (j.contains("data")) {
      const json& d = j.at("data");
      check_keys(d, {"train", "validation"}, "data");
      read(d, "train", c.train);
      read(d, "validation", c.validation);
    }
    if (j.contains("models")) {
      const json& m = j.at("models");
      check_keys(m, {"families", "variations", "links", "time_covariate", "period", "cyclic_dim",
                     "lon", "lat", "thinplate_dim", "lambda"},
                 "models");
      read(m, "families", c.families);
      read(m, "variations", c.variations);
      read(m, "links", c.links);
      read(m, "time_covariate", c.grid.time_covariate);
      read(m, "period", c.grid.period);
      read(m, "cyclic_dim", c.grid.cyclic_dim);
      read(m, "lon", c.grid.lon);
      read(m, "lat", c.grid.lat);
      read(m, "thinplate_dim", c.grid.thinplate_dim);
      if (m.contains("lambda") && !m.at("lambda").is_null()) {
        c.grid.lambda = m.at("lambda").get<double>();
      }
    }
    if (j.contains("control")) {
      const json& k = j.at("control");
      check_keys(k, {"n_cyc", "step", "autostep", "tolerance", "select_lambda", "log10_lambda_min",
                     "log10_lambda_max", "curvature_floor", "max_rejections", "joint_phase", "init"},
                 "control");
      read(k, "n_cyc", c.control.n_cyc);
      if (k.contains("step")) {
        c.control.step = k.at("step").is_array() ? k.at("step").get<std::vector<double>>()
                                                 : std::vector<double>{k.at("step").get<double>()};
      }
      read(k, "autostep", c.control.autostep);
      read(k, "tolerance", c.control.tolerance);
      read(k, "select_lambda", c.control.select_lambda);
      read(k, "log10_lambda_min", c.control.log10_lambda_min);
      read(k, "log10_lambda_max", c.control.log10_lambda_max);
      read(k, "curvature_floor", c.control.curvature_floor);
      read(k, "max_rejections", c.control.max_rejections);
      read(k, "joint_phase", c.control.joint_phase);
      read(k, "init", c.control.init);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.control.n_cyc < 1) throw ConfigError("config: n_cyc must be >= 1");
  for (double s : c.control.step) {
    if (!(s > 0.0 && s <= 1.0)) throw ConfigError("config: step sizes must lie in (0, 1]");
  }
  if (!(c.control.tolerance > 0.0)) throw ConfigError("config: tolerance must be > 0");
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse config file " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::vector<ModelSpec> grid_specs(const RunConfig& config) {
  if (config.families.empty() || config.variations.empty()) {
    throw ConfigError("config: at least one family and one variation are required");
  }
  const auto& known = grid_variations();
  for (const auto& v : config.variations) {
    if (std::find(known.begin(), known.end(), v) == known.end()) {
      throw ConfigError("unknown model variation '" + v + "'");
    }
  }
  std::vector<ModelSpec> specs;
  for (const auto& family : config.families) {
    const FamilyPtr fam = make_family(family);
    for (const auto& [param, link] : config.links) {
      (void)fam->parameter_index(param);
      (void)LinkFunction::parse(link);
    }
    for (const auto& v : config.variations) {
      if (v == "M.st3nomu" && family != "egpd4") continue;
      ModelSpec spec = make_grid_spec(family, v, config.grid);
      for (const auto& [param, link] : config.links) {
        spec.parameters[fam->parameter_index(param)].link = LinkFunction::parse(link);
      }
      specs.push_back(std::move(spec));
    }
  }
  if (specs.empty()) throw ConfigError("config: the model grid is empty");
  return specs;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const DomainError*>(&e)) return kExitData;
  if (dynamic_cast<const NumericalError*>(&e) || dynamic_cast<const ParameterError*>(&e)) {
    return kExitNumerical;
  }
  return kExitConfig;
}

namespace {

struct Common {
  std::string config_path;
  CLI::Option* output_flag = nullptr;
};

RunConfig base_config(const Common& common) {
  return common.config_path.empty() ? RunConfig{} : load_config(common.config_path);
}

int cmd_prepare(RunConfig config, const CLI::Option* output_flag, std::ostream& out) {
  if (config.inputs.empty()) throw ConfigError("prepare: no input files given");
  const fs::path dir = output_dir(config, output_flag);
  std::vector<fs::path> paths(config.inputs.begin(), config.inputs.end());
  IngestResult raw = ingest(paths, config.format);
  const IngestReport ingest_report = raw.report;
  AggregationReport agg;
  const auto hourly = aggregate_hourly(std::move(raw.records), config.resolution_minutes, &agg);
  PrepareReport prep;
  const ObservationTable table = prepare(hourly, config.prepare, &prep);
  const auto [train, validation] = split_stations(table, config.train_fraction, config.seed);

  write_canonical_csv(train, dir / "train.csv");
  write_canonical_csv(validation, dir / "validation.csv");
  write_cache(train, dir / "train.bin");
  write_cache(validation, dir / "validation.bin");

  const json report{
      {"input_rows", ingest_report.rows},
      {"malformed_rows", ingest_report.malformed},
      {"missing_values", ingest_report.missing},
      {"malformed_samples", ingest_report.samples},
      {"complete_hours", agg.complete},
      {"incomplete_hours", agg.incomplete},
      {"positive_hours", prep.positive},
      {"after_censor", prep.censored},
      {"after_stride", prep.retained},
      {"train_rows", train.size()},
      {"validation_rows", validation.size()},
      {"train_stations", train.stations()},
      {"validation_stations", validation.stations()}};
  write_json(dir / "prepare_report.json", report);
  config.train = (dir / "train.csv").string();
  config.validation = (dir / "validation.csv").string();
  write_json(dir / "effective_config.json", config_to_json(config));
  out << "prepared " << prep.retained << " rows: " << train.size() << " train, "
      << validation.size() << " validation -> " << dir.string() << "\n";
  return kExitOk;
}

int cmd_fit(RunConfig config, const CLI::Option* output_flag, std::ostream& out,
            std::ostream& err) {
  const std::vector<ModelSpec> specs = grid_specs(config);
  const fs::path dir = output_dir(config, output_flag);
  if (config.train.empty()) config.train = (dir / "train.csv").string();
  if (config.validation.empty() && fs::exists(dir / "validation.csv")) {
    config.validation = (dir / "validation.csv").string();
  }
  const ModelFrame train = read_table(config.train).frame();
  ModelFrame validation;
  const bool has_validation = !config.validation.empty();
  if (has_validation) validation = read_table(config.validation).frame();

  fs::create_directories(dir / "models");
  std::vector<CriterionReport> reports;
  int first_failure = kExitOk;
  std::size_t failures = 0;
  for (const auto& spec : specs) {
    try {
      const FittedModel fitted = fit(train, spec, config.control);
      save_model(fitted, dir / "models" / (sanitize(fitted.name) + ".json"));
      CriterionReport r = criterion_report(fitted);
      if (has_validation && validation.rows() > 0) r.gd_validation = validation_deviance(fitted, validation);
      out << fitted.name << ": GD " << num(r.gd) << ", edf " << num(r.edf)
          << (fitted.converged ? "" : " (not converged)") << "\n";
      reports.push_back(std::move(r));
    } catch (const Error& e) {
      CriterionReport r;
      r.model = spec.name;
      r.family = spec.family;
      r.status = "failed";
      r.error = e.what();
      err << spec.name << ": fit failed: " << e.what() << "\n";
      if (failures++ == 0) first_failure = exit_code_for(e);
      reports.push_back(std::move(r));
    }
  }
  std::ofstream csv(dir / "criteria.csv");
  write_criteria_csv(reports, csv);
  write_json(dir / "effective_config.json", config_to_json(config));
  return failures == specs.size() ? first_failure : kExitOk;
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path == "-") return std::cout;
  file.open(path);
  if (!file) throw ConfigError("cannot write " + path);
  return file;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& output, std::ostream& out) {
  const FittedModel fitted = load_model(model_path);
  const ModelFrame frame = read_frame_csv(data_path);
  const ParameterTable params = predict_params(fitted, frame);
  std::ofstream file;
  std::ostream& os = output == "-" ? out : open_output(output, file);
  for (std::size_t c = 0; c < params.names.size(); ++c) os << (c ? "," : "") << params.names[c];
  os << "\n";
  for (Eigen::Index i = 0; i < params.values.rows(); ++i) {
    for (Eigen::Index c = 0; c < params.values.cols(); ++c) {
      os << (c ? "," : "") << num(params.values(i, c));
    }
    os << "\n";
  }
  return kExitOk;
}

int cmd_simulate(const std::string& model_path, const std::string& data_path, int n_per_row,
                 std::uint64_t seed, const std::string& output, std::ostream& out) {
  if (n_per_row < 0) throw ConfigError("simulate: n-per-row must be >= 0");
  const FittedModel fitted = load_model(model_path);
  const ModelFrame frame = read_frame_csv(data_path);
  const ParameterTable params = predict_params(fitted, frame);
  std::ofstream file;
  std::ostream& os = output == "-" ? out : open_output(output, file);
  os << "row,draw,y\n";
  Rng rng(seed);
  const Family& family = fitted.family();
  for (Eigen::Index i = 0; i < params.values.rows(); ++i) {
    const auto theta = params.row(i);
    for (int k = 0; k < n_per_row; ++k) {
      os << i << ',' << k << ',' << num(family.quantile(uniform_open01(rng), theta)) << "\n";
    }
  }
  return kExitOk;
}

int cmd_diagnose(RunConfig config, const CLI::Option* output_flag,
                 const std::vector<std::string>& models, const std::string& data_path,
                 const CLI::Option* tail_flag, double tail, bool by_season, std::ostream& out) {
  if (models.empty()) throw ConfigError("diagnose: no model given");
  const fs::path dir = output_dir(config, output_flag);
  const ObservationTable table = read_table(data_path);
  if (table.empty()) throw DataError("diagnose: " + data_path + " has no rows");

  std::vector<std::pair<std::string, ObservationTable>> groups;
  if (by_season) {
    const auto seasons = seasonal_split(table);
    for (std::size_t s = 0; s < seasons.size(); ++s) groups.emplace_back(kSeasons[s], seasons[s]);
  } else {
    groups.emplace_back("", table);
  }

  std::ostringstream summary;
  summary << "model,season,n,ks_statistic,ks_pvalue,gd_validation,tail_points\n";
  for (const auto& model_path : models) {
    const FittedModel fitted = load_model(model_path);
    for (const auto& [season, rows] : groups) {
      PPData pp;
      if (!rows.empty()) pp = pit_residuals(fitted, rows.frame());
      pp.season = season;
      const double ks = ks_uniform_statistic(pp.empirical);
      const double pvalue = ks_pvalue(ks, pp.size());
      const std::string gdv = rows.empty() ? "" : num(validation_deviance(fitted, rows.frame()));
      std::size_t tail_points = pp.size();
      if (tail_flag->count()) {
        pp = restrict_tail(pp, tail);
        tail_points = pp.size();
        if (pp.empty_tail) out << fitted.name << " " << season << ": no points above " << tail << "\n";
      }
      std::string file = "pp_" + sanitize(fitted.name);
      if (!season.empty()) file += "_" + season;
      std::ofstream csv(dir / (file + ".csv"));
      write_pp_csv({pp}, csv);
      summary << fitted.name << ',' << (season.empty() ? "all" : season) << ',' << rows.size()
              << ',' << num(ks) << ',' << num(pvalue) << ',' << gdv << ',' << tail_points << "\n";
    }
  }
  write_text(dir / "diagnose_summary.csv", summary.str());
  out << "diagnostics written to " << dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Extended generalized Pareto regression for precipitation"};
  app.require_subcommand(1);

  // prepare
  Common prep_common;
  std::vector<std::string> inputs;
  double censor = 0.0, train_fraction = 0.0;
  int stride = 0, resolution = 0;
  std::uint64_t seed = 0;
  auto* prep = app.add_subcommand("prepare", "Aggregate, filter and split station records");
  prep->add_option("-c,--config", prep_common.config_path, "JSON config file");
  auto* o_inputs = prep->add_option("-i,--input", inputs, "Input CSV files");
  auto* o_censor = prep->add_option("--censor", censor, "Censoring threshold in mm");
  auto* o_stride = prep->add_option("--stride", stride, "Keep clock hours divisible by this");
  auto* o_frac = prep->add_option("--train-fraction", train_fraction, "Share of training stations");
  auto* o_seed = prep->add_option("--seed", seed, "Seed of the station split");
  auto* o_res = prep->add_option("--resolution-minutes", resolution, "Input record spacing");
  std::string prep_out;
  prep_common.output_flag = prep->add_option("-o,--output-dir", prep_out, "Output directory");

  // fit
  Common fit_common;
  std::string train, validation, fit_out;
  std::vector<std::string> families, variations;
  int n_cyc = 0, cyclic_dim = 0, tp_dim = 0;
  std::vector<double> steps;
  bool autostep = true;
  double tolerance = 0.0, lambda = 0.0;
  auto* fitc = app.add_subcommand("fit", "Fit the model grid and write criteria");
  fitc->add_option("-c,--config", fit_common.config_path, "JSON config file");
  auto* o_train = fitc->add_option("--train", train, "Training table");
  auto* o_valid = fitc->add_option("--validation", validation, "Validation table");
  auto* o_fam = fitc->add_option("--family", families, "egpd1, egpd3, egpd4 or gamma");
  auto* o_var = fitc->add_option("--variation", variations, "M.0, M.t, M.tnomu, M.st, ...");
  auto* o_ncyc = fitc->add_option("--n-cyc", n_cyc, "Maximum outer cycles");
  auto* o_step = fitc->add_option("--step", steps, "Step size per parameter");
  auto* o_auto = fitc->add_option("--autostep", autostep, "Adapt the step size");
  auto* o_tol = fitc->add_option("--tolerance", tolerance, "Penalized deviance tolerance");
  auto* o_lambda = fitc->add_option("--lambda", lambda, "Fixed smoothing parameter");
  auto* o_cdim = fitc->add_option("--cyclic-dim", cyclic_dim, "Cyclic basis size");
  auto* o_tdim = fitc->add_option("--thinplate-dim", tp_dim, "Thin-plate basis rank");
  fit_common.output_flag = fitc->add_option("-o,--output-dir", fit_out, "Output directory");

  // predict / simulate
  std::string model_path, data_path, output = "-";
  int n_per_row = 1;
  std::uint64_t sim_seed = 1;
  auto* pred = app.add_subcommand("predict", "Fitted parameters at new covariate rows");
  pred->add_option("-m,--model", model_path, "Model JSON")->required();
  pred->add_option("-d,--data", data_path, "Covariate CSV")->required();
  pred->add_option("--output", output, "Output CSV, '-' for stdout");
  auto* sim = app.add_subcommand("simulate", "Draw samples at new covariate rows");
  sim->add_option("-m,--model", model_path, "Model JSON")->required();
  sim->add_option("-d,--data", data_path, "Covariate CSV")->required();
  sim->add_option("-n,--n-per-row", n_per_row, "Draws per row");
  sim->add_option("--seed", sim_seed, "Random seed");
  sim->add_option("--output", output, "Output CSV, '-' for stdout");

  // diagnose
  Common diag_common;
  std::vector<std::string> models;
  std::string diag_data, diag_out;
  double tail = 0.99;
  bool by_season = false;
  auto* diag = app.add_subcommand("diagnose", "P-P data and calibration summary");
  diag->add_option("-c,--config", diag_common.config_path, "JSON config file");
  diag->add_option("-m,--model", models, "Model JSON files")->required();
  diag->add_option("-d,--data", diag_data, "Canonical CSV or cache")->required();
  auto* o_tail = diag->add_option("--tail", tail, "Keep points with reference probability >= p0");
  diag->add_flag("--by-season", by_season, "One file per meteorological season");
  diag_common.output_flag = diag->add_option("-o,--output-dir", diag_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (prep->parsed()) {
      RunConfig c = base_config(prep_common);
      if (o_inputs->count()) c.inputs = inputs;
      if (o_censor->count()) c.prepare.censor = censor;
      if (o_stride->count()) c.prepare.stride = stride;
      if (o_frac->count()) c.train_fraction = train_fraction;
      if (o_seed->count()) c.seed = seed;
      if (o_res->count()) c.resolution_minutes = resolution;
      if (prep_common.output_flag->count()) c.output_dir = prep_out;
      return cmd_prepare(std::move(c), prep_common.output_flag, out);
    }
    if (fitc->parsed()) {
      RunConfig c = base_config(fit_common);
      if (o_train->count()) c.train = train;
      if (o_valid->count()) c.validation = validation;
      if (o_fam->count()) c.families = families;
      if (o_var->count()) c.variations = variations;
      if (o_ncyc->count()) c.control.n_cyc = n_cyc;
      if (o_step->count()) c.control.step = steps;
      if (o_auto->count()) c.control.autostep = autostep;
      if (o_tol->count()) c.control.tolerance = tolerance;
      if (o_lambda->count()) c.grid.lambda = lambda;
      if (o_cdim->count()) c.grid.cyclic_dim = cyclic_dim;
      if (o_tdim->count()) c.grid.thinplate_dim = tp_dim;
      if (fit_common.output_flag->count()) c.output_dir = fit_out;
      c = config_from_json(config_to_json(c));
      return cmd_fit(std::move(c), fit_common.output_flag, out, err);
    }
    if (pred->parsed()) return cmd_predict(model_path, data_path, output, out);
    if (sim->parsed()) return cmd_simulate(model_path, data_path, n_per_row, sim_seed, output, out);
    if (diag->parsed()) {
      RunConfig c = base_config(diag_common);
      if (diag_common.output_flag->count()) c.output_dir = diag_out;
      return cmd_diagnose(std::move(c), diag_common.output_flag, models, diag_data, o_tail, tail,
                          by_season, out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitConfig;
}

}  // namespace egpd
