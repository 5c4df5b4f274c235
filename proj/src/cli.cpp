#include "hsd/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hsd/background.hpp"
#include "hsd/detectors.hpp"
#include "hsd/envi.hpp"
#include "hsd/error.hpp"
#include "hsd/metrics.hpp"
#include "hsd/scene.hpp"
#include "hsd/spectral_nn.hpp"
#include "hsd/synth.hpp"

namespace hsd::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr std::size_t kChunkLines = 64;

// Files are held in memory until the command has succeeded, then each one is
// renamed into place.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  const fs::path& dir() const { return dir_; }
  fs::path path(const std::string& name) const { return dir_ / name; }

  void add(const std::string& name, std::string bytes) {
    for (auto& f : files_)
      if (f.first == name) {
        f.second = std::move(bytes);
        return;
      }
    files_.emplace_back(name, std::move(bytes));
  }
  void add_encoded(const std::string& stem, envi::Encoded encoded) {
    add(stem + ".hdr", std::move(encoded.header));
    add(stem + ".img", std::move(encoded.raster));
  }

  void commit(std::ostream& log) const {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) fail(ErrorKind::io, "cannot create output directory " + dir_.string() + ": " + ec.message());
    for (const auto& [name, bytes] : files_) envi::write_file_atomic(dir_ / name, bytes);
    for (const auto& f : files_) log << "wrote " << (dir_ / f.first).string() << "\n";
  }

 private:
  fs::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

void require_file(const std::string& path, const char* what) {
  std::error_code ec;
  if (path.empty()) fail(ErrorKind::validation, std::string(what) + " path is empty");
  if (!fs::is_regular_file(path, ec))
    fail(ErrorKind::validation, std::string(what) + " not found: " + path);
}

// Header path of an ENVI pair given either the .hdr or the raster path.
fs::path header_path(const std::string& path) {
  fs::path p(path);
  if (p.extension() == ".hdr") return p;
  fs::path hdr = p;
  hdr += ".hdr";
  std::error_code ec;
  if (fs::exists(hdr, ec)) return hdr;
  return fs::path(p).replace_extension(".hdr");
}

envi::FilePair input_pair(const std::string& path, const char* what) {
  const fs::path hdr = header_path(path);
  require_file(hdr.string(), what);
  envi::FilePair files = envi::locate(hdr);
  std::error_code ec;
  if (!fs::is_regular_file(files.raster, ec))
    fail(ErrorKind::validation, std::string(what) + " raster not found for " + hdr.string());
  return files;
}

struct RegionArgs {
  std::string presets;
  std::string name;
  std::vector<std::size_t> window;

  void add_to(CLI::App* app, const std::string& what) {
    app->add_option("--regions", presets,
                    "Region preset file (lines 'region <name> <line> <sample> <lines> <samples>' "
                    "or 'split <parent> <boundary> <left> <right>'); without it the built-in "
                    "PFM-1 presets are used")
        ->check(CLI::ExistingFile);
    app->add_option("--region", name,
                    "Named " + what + " region; 'full' without --regions means the whole file");
    app->add_option("--window", window,
                    "Explicit " + what + " region as LINE,SAMPLE,LINES,SAMPLES (overrides --region)")
        ->delimiter(',')
        ->expected(4);
  }
  bool given() const { return !name.empty() || !window.empty(); }
};

Region file_extent(const envi::Header& h) { return Region{"full", 0, 0, h.lines, h.samples}; }

Region resolve_region(const RegionArgs& args, const envi::Header& h) {
  Region r;
  if (!args.window.empty()) {
    r = Region{args.name.empty() ? "window" : args.name, args.window[0], args.window[1],
               args.window[2], args.window[3]};
  } else if (args.name.empty() || (args.name == "full" && args.presets.empty())) {
    r = file_extent(h);
  } else if (!args.presets.empty()) {
    std::ifstream in(args.presets);
    std::stringstream ss;
    ss << in.rdbuf();
    const RegionPresets presets = parse_presets(ss.str());
    const Region* found = presets.find(args.name);
    if (!found) fail(ErrorKind::validation, "region '" + args.name + "' not defined in " + args.presets);
    r = *found;
  } else {
    const RegionPresets presets = pfm1_presets();
    const Region* found = presets.find(args.name);
    if (!found) fail(ErrorKind::validation, "unknown region '" + args.name + "' (no --regions file given)");
    r = *found;
  }
  if (r.lines == 0 || r.samples == 0) fail(ErrorKind::validation, "region '" + r.name + "' is empty");
  if (!file_extent(h).contains(r))
    fail(ErrorKind::validation, "region '" + r.name + "' (" + std::to_string(r.lines) + "x" +
                                    std::to_string(r.samples) + " at " + std::to_string(r.line_offset) +
                                    "," + std::to_string(r.sample_offset) + ") exceeds the " +
                                    std::to_string(h.lines) + "x" + std::to_string(h.samples) + " cube");
  return r;
}

ordered_json region_json(const Region& r) {
  return ordered_json{{"name", r.name},
                      {"line_offset", r.line_offset},
                      {"sample_offset", r.sample_offset},
                      {"lines", r.lines},
                      {"samples", r.samples}};
}

// Reads `region` in fixed chunks of kChunkLines lines.
template <class Fn>
void for_each_chunk(const envi::FilePair& files, const envi::Header& h, const Region& region, Fn fn) {
  std::ifstream raster(files.raster, std::ios::binary);
  if (!raster) fail(ErrorKind::io, "cannot open raster " + files.raster.string());
  for (std::size_t line = region.line_offset; line < region.line_end(); line += kChunkLines) {
    const envi::Window w{line, std::min(line + kChunkLines, region.line_end()), region.sample_offset,
                         region.sample_end()};
    const SpectralCube chunk = envi::read_cube(h, raster, w);
    if (chunk.nonfinite_count)
      fail(ErrorKind::numeric, files.raster.string() + " has " + std::to_string(chunk.nonfinite_count) +
                                   " non-finite values in lines " + std::to_string(w.line_begin) + "-" +
                                   std::to_string(w.line_end - 1));
    fn(chunk);
  }
}

// Mask covering the whole cube file, cropped to `region`.
GroundTruthMask mask_for(const std::string& path, const envi::Header& cube_header, const Region& region) {
  GroundTruthMask mask = envi::load_mask(input_pair(path, "mask"));
  if (mask.region.lines != cube_header.lines || mask.region.samples != cube_header.samples)
    fail(ErrorKind::validation, "mask is " + std::to_string(mask.region.lines) + "x" +
                                    std::to_string(mask.region.samples) + ", cube is " +
                                    std::to_string(cube_header.lines) + "x" +
                                    std::to_string(cube_header.samples));
  return crop(mask, region);
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

// --------------------------------------------------------------------------

struct DetectArgs {
  std::string cube, signature, mask, method = "ace", out = ".", load_background, save_background;
  RegionArgs region, stats_region;
  bool centered_cem = false, exclude_positives = false, raw = false;
  unsigned parallel = 1;
};

void run_detect(const DetectArgs& a, std::ostream& log) {
  const auto method = parse_method(a.method);
  if (!method || *method == Method::nn)
    fail(ErrorKind::validation, "detect method must be sam, mf, ace or cem, got '" + a.method + "'");
  const envi::FilePair cube_files = input_pair(a.cube, "cube");
  require_file(a.signature, "signature file");
  if (!a.mask.empty()) input_pair(a.mask, "mask");
  if (!a.load_background.empty()) require_file(a.load_background, "background model");
  if (a.exclude_positives && a.mask.empty())
    fail(ErrorKind::validation, "--exclude-positives needs --mask");

  const envi::Header h = envi::read_header(cube_files.header);
  const Region region = resolve_region(a.region, h);
  RegionArgs stats_args = a.stats_region;
  stats_args.presets = a.region.presets;
  const Region stats = stats_args.given() ? resolve_region(stats_args, h) : region;
  const Signature target = make_signature(envi::read_signature_csv(a.signature),
                                          fs::path(a.signature).filename().string(), h.bands);

  BackgroundModel model;
  std::string background_source = "estimated";
  if (!a.load_background.empty()) {
    model = load_model(a.load_background);
    if (model.bands() != h.bands)
      fail(ErrorKind::validation, "background model has " + std::to_string(model.bands()) +
                                      " bands, cube has " + std::to_string(h.bands));
    background_source = "loaded";
  } else {
    log << "estimating background over " << stats.name << " (" << stats.pixel_count() << " pixels)\n";
    std::optional<GroundTruthMask> mask;
    if (a.exclude_positives) mask = mask_for(a.mask, h, stats);
    MomentAccumulator acc(h.bands, a.parallel);
    std::size_t row0 = 0;
    for_each_chunk(cube_files, h, stats, [&](const SpectralCube& chunk) {
      const auto values = chunk.values();
      const std::size_t n = chunk.pixel_count();
      if (!mask) {
        acc.add(values);
      } else {
        for (std::size_t i = 0; i < n;) {
          while (i < n && mask->labels[row0 + i]) ++i;
          std::size_t j = i;
          while (j < n && !mask->labels[row0 + j]) ++j;
          if (j > i) acc.add(values.subspan(i * h.bands, (j - i) * h.bands));
          i = j;
        }
      }
      row0 += n;
    });
    model = acc.finish(-1.0, a.exclude_positives ? h.bands + 1 : 2);
  }

  DetectOptions opts;
  opts.centered_cem = a.centered_cem;
  opts.normalize = !a.raw;
  opts.threads = a.parallel;
  const Detector detector(*method, model, target, opts);

  log << "scoring " << region.name << " with " << a.method << "\n";
  ScoreMap map;
  map.region = region;
  map.method = *method;
  map.scores.resize(region.pixel_count());
  std::size_t offset = 0;
  for_each_chunk(cube_files, h, region, [&](const SpectralCube& chunk) {
    const std::size_t n = chunk.pixel_count();
    map.dead_pixels += detector.score_parallel(
        chunk.values(), std::span<double>(map.scores).subspan(offset, n), a.parallel);
    offset += n;
  });
  check_finite(map);
  const auto [lo, hi] = std::minmax_element(map.scores.begin(), map.scores.end());
  map.raw_min = *lo;
  map.raw_max = *hi;
  map.constant = *lo == *hi;
  if (*method != Method::sam && !a.raw) normalize_scores(map);

  const std::string stem = std::string(to_string(*method)) + "_" + region.name;
  Outputs outputs(a.out);
  outputs.add_encoded(stem, envi::encode_scoremap(map));
  if (!a.save_background.empty()) outputs.add(a.save_background, encode_model(model));

  ordered_json report;
  report["command"] = "detect";
  report["method"] = to_string(*method);
  report["variant"] = *method == Method::cem ? (a.centered_cem ? "centered" : "uncentered") : "standard";
  report["region"] = region_json(region);
  report["cube"] = cube_files.header.string();
  report["signature"] = a.signature;
  report["bands"] = h.bands;
  report["background"] = ordered_json{{"source", background_source},
                                      {"region", region_json(stats)},
                                      {"exclude_positives", a.exclude_positives},
                                      {"pixels", model.sample_count},
                                      {"ridge", model.ridge}};
  report["score_map"] = stem + ".hdr";
  report["normalized"] = map.normalized;
  report["constant"] = map.constant;
  report["raw_min"] = map.raw_min;
  report["raw_max"] = map.raw_max;
  report["dead_pixels"] = map.dead_pixels;
  report["parallel"] = a.parallel;
  outputs.add(stem + ".json", dump(report));
  outputs.commit(log);
}

// --------------------------------------------------------------------------

struct EvalArgs {
  std::string scores, mask, out = ".", label;
  bool svg = false;
  double log_fpr_min = 1e-6;
  std::size_t log_points = 61;
};

void run_eval(const EvalArgs& a, std::ostream& out, std::ostream& log) {
  const envi::FilePair score_files = input_pair(a.scores, "score map");
  const envi::FilePair mask_files = input_pair(a.mask, "mask");
  if (!(a.log_fpr_min > 0.0 && a.log_fpr_min < 1.0))
    fail(ErrorKind::validation, "--log-fpr-min must lie in (0, 1)");
  if (a.log_points < 2) fail(ErrorKind::validation, "--log-points must be at least 2");

  const ScoreMap map = envi::load_scoremap(score_files);
  GroundTruthMask mask = envi::load_mask(mask_files);
  if (mask.region.contains(map.region)) {
    mask = crop(mask, map.region);
  } else if (mask.region.lines == map.region.lines && mask.region.samples == map.region.samples) {
    mask.region = map.region;  // already cropped to the scored region
  } else {
    fail(ErrorKind::validation, "mask (" + std::to_string(mask.region.lines) + "x" +
                                    std::to_string(mask.region.samples) +
                                    ") does not cover the score map region '" + map.region.name + "'");
  }

  const Curve roc_curve = roc(map, mask);
  const Curve pr_curve = pr(map, mask);
  const std::vector<double> grid = log_grid(a.log_fpr_min, 1.0, a.log_points);
  const Curve log_curve = log_roc_resample(roc_curve, grid);

  const std::string method = std::string(to_string(map.method));
  const std::string stem = a.label.empty() ? method + "_" + map.region.name : a.label;
  Outputs outputs(a.out);
  outputs.add(stem + "_roc.csv", curve_csv(roc_curve, "fpr", "tpr"));
  outputs.add(stem + "_pr.csv", curve_csv(pr_curve, "recall", "precision"));
  outputs.add(stem + "_roc_log.csv", curve_csv(log_curve, "fpr", "tpr"));
  if (a.svg) {
    outputs.add(stem + "_roc.svg", curve_svg({{method, &roc_curve}}, "false positive rate", "true positive rate", false));
    outputs.add(stem + "_roc_log.svg", curve_svg({{method, &roc_curve}}, "false positive rate", "true positive rate", true));
    outputs.add(stem + "_pr.svg", curve_svg({{method, &pr_curve}}, "recall", "precision", false));
  }
  ordered_json summary{{"method", method},
                       {"region", map.region.name},
                       {"auc", roc_curve.summary},
                       {"ap", pr_curve.summary},
                       {"positives", mask.positive_count},
                       {"negatives", mask.labels.size() - mask.positive_count}};
  outputs.add(stem + "_summary.json", dump(summary));
  outputs.commit(log);
  out << method << " " << map.region.name << " auc=" << roc_curve.summary << " ap=" << pr_curve.summary << "\n";
}

// --------------------------------------------------------------------------

struct TrainArgs {
  std::string cube, mask, out = ".";
  RegionArgs region;
  std::uint64_t seed = 0;
  std::size_t epochs = 50, batch = 1024;
  double lr = 2e-4;
  std::optional<double> positive_weight;
  bool no_standardize = false;
  unsigned parallel = 1;
};

void run_train(const TrainArgs& a, std::ostream& log) {
  const envi::FilePair cube_files = input_pair(a.cube, "cube");
  input_pair(a.mask, "mask");
  if (a.epochs == 0) fail(ErrorKind::validation, "--epochs must be positive");
  if (a.batch == 0) fail(ErrorKind::validation, "--batch-size must be positive");
  if (!(a.lr > 0.0)) fail(ErrorKind::validation, "--lr must be positive");
  if (a.positive_weight && !(*a.positive_weight > 0.0))
    fail(ErrorKind::validation, "--positive-weight must be positive");

  const envi::Header h = envi::read_header(cube_files.header);
  const Region region = resolve_region(a.region, h);
  const GroundTruthMask mask = mask_for(a.mask, h, region);
  PixelTable table;
  {
    SpectralCube cube = envi::load_cube(cube_files, envi::Window{region.line_offset, region.line_end(),
                                                                 region.sample_offset, region.sample_end()});
    if (cube.nonfinite_count)
      fail(ErrorKind::numeric, "training region has " + std::to_string(cube.nonfinite_count) + " non-finite values");
    table = flatten(cube, &mask);
  }
  if (table.positive_count() == 0)
    fail(ErrorKind::validation, "training region '" + region.name + "' has no target pixels");

  nn::TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.learning_rate = a.lr;
  cfg.positive_weight = a.positive_weight;
  cfg.seed = a.seed;
  cfg.standardize = !a.no_standardize;
  cfg.threads = a.parallel;
  log << "training on " << region.name << " (" << table.size() << " pixels, " << table.positive_count()
      << " targets)\n";
  const nn::TrainResult result = nn::train(table, cfg);

  Outputs outputs(a.out);
  outputs.add("nn_model.bin", nn::encode_model(result.model));
  outputs.add("nn_loss.csv", nn::loss_csv(result.epoch_loss));
  ordered_json report{{"command", "train-nn"},
                      {"region", region_json(region)},
                      {"cube", cube_files.header.string()},
                      {"pixels", table.size()},
                      {"positives", table.positive_count()},
                      {"positive_weight", result.positive_weight},
                      {"epochs", a.epochs},
                      {"batch_size", a.batch},
                      {"learning_rate", a.lr},
                      {"seed", a.seed},
                      {"standardize", !a.no_standardize},
                      {"final_loss", result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back()},
                      {"beta1", result.model.params.beta1},
                      {"beta2", result.model.params.beta2}};
  outputs.add("nn_train.json", dump(report));
  outputs.commit(log);
}

struct ScoreNnArgs {
  std::string cube, model, out = ".";
  RegionArgs region;
  unsigned parallel = 1;
};

void run_score_nn(const ScoreNnArgs& a, std::ostream& log) {
  const envi::FilePair cube_files = input_pair(a.cube, "cube");
  require_file(a.model, "model file");
  const envi::Header h = envi::read_header(cube_files.header);
  const nn::SpectralModel model = nn::load_model(a.model);
  if (model.bands() != h.bands)
    fail(ErrorKind::validation, "model expects " + std::to_string(model.bands()) + " bands, cube has " +
                                    std::to_string(h.bands));
  const Region region = resolve_region(a.region, h);

  log << "scoring " << region.name << " with nn\n";
  ScoreMap map;
  map.region = region;
  map.method = Method::nn;
  map.scores.reserve(region.pixel_count());
  for_each_chunk(cube_files, h, region, [&](const SpectralCube& chunk) {
    const ScoreMap part = nn::nn_score_region(chunk, model, a.parallel);
    map.scores.insert(map.scores.end(), part.scores.begin(), part.scores.end());
  });
  check_finite(map);
  const auto [lo, hi] = std::minmax_element(map.scores.begin(), map.scores.end());
  map.raw_min = *lo;
  map.raw_max = *hi;

  const std::string stem = "nn_" + region.name;
  Outputs outputs(a.out);
  outputs.add_encoded(stem, envi::encode_scoremap(map));
  ordered_json report{{"command", "score-nn"},
                      {"method", "nn"},
                      {"region", region_json(region)},
                      {"cube", cube_files.header.string()},
                      {"model", a.model},
                      {"score_map", stem + ".hdr"},
                      {"raw_min", map.raw_min},
                      {"raw_max", map.raw_max},
                      {"parallel", a.parallel}};
  outputs.add(stem + ".json", dump(report));
  outputs.commit(log);
}

// --------------------------------------------------------------------------

struct SynthArgs {
  std::string out = ".";
  std::size_t lines = 128, samples = 128, bands = 32, plants = 200;
  std::uint64_t seed = 1;
  double deflection = 6.0, spread = 2.0, noise = 0.0;
  std::optional<std::size_t> split;
  bool contamination = false;
};

void run_synth(const SynthArgs& a, std::ostream& log) {
  if (a.lines == 0 || a.samples < 2 || a.bands == 0)
    fail(ErrorKind::validation, "synthetic scene needs lines >= 1, samples >= 2, bands >= 1");
  if (a.plants > a.lines * a.samples) fail(ErrorKind::validation, "more plants than pixels");
  if (!(a.deflection > 0.0)) fail(ErrorKind::validation, "--deflection must be positive");
  if (!(a.spread >= 1.0)) fail(ErrorKind::validation, "--abundance-spread must be at least 1");
  const std::size_t boundary = a.split.value_or(a.samples / 2);
  if (boundary == 0 || boundary >= a.samples)
    fail(ErrorKind::validation, "--split must lie in (0, samples)");

  synth::SynthSpec spec;
  spec.lines = a.lines;
  spec.samples = a.samples;
  spec.bands = a.bands;
  spec.seed = a.seed;
  spec.noise_floor = a.noise;
  spec.contamination = a.contamination;
  const double lo = std::min(1.0, synth::abundance_for_deflection(spec, a.deflection));
  const double hi = std::min(1.0, lo * a.spread);
  spec.plants = synth::scatter_plants(a.lines, a.samples, a.plants, lo, hi, a.seed ^ 0x706c616e74ULL);
  const synth::Scene scene = synth::generate(spec);

  RegionPresets presets;
  presets.add(Region{"full", 0, 0, a.lines, a.samples});
  presets.add_split("full", boundary, "train", "test");

  Outputs outputs(a.out);
  outputs.add_encoded("cube", envi::encode_cube(scene.cube, envi::WriteOptions{envi::DataType::f64}));
  outputs.add_encoded("mask", envi::encode_mask(scene.mask));
  outputs.add("signature.csv", envi::signature_csv(scene.target.values, scene.cube.wavelengths));
  outputs.add("regions.cfg", format_presets(presets));
  ordered_json info{{"command", "synth"},
                    {"lines", a.lines},
                    {"samples", a.samples},
                    {"bands", a.bands},
                    {"seed", a.seed},
                    {"plants", scene.mask.positive_count},
                    {"min_abundance", lo},
                    {"max_abundance", hi},
                    {"min_deflection", synth::snr_of(spec)},
                    {"noise_floor", a.noise},
                    {"contamination", a.contamination},
                    {"contaminated_pixels", scene.contaminated_pixels},
                    {"split_sample", boundary}};
  outputs.add("synth.json", dump(info));
  log << "generated " << a.lines << "x" << a.samples << "x" << a.bands << " scene with "
      << scene.mask.positive_count << " targets\n";
  outputs.commit(log);
}

// --------------------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> summaries;
  std::string csv;
};

std::string cell(const std::optional<double>& v) {
  if (!v) return "--";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

void run_report(const ReportArgs& a, std::ostream& out, std::ostream& err) {
  for (const auto& s : a.summaries) require_file(s, "summary file");
  struct Entry {
    double ap = 0, auc = 0;
  };
  std::map<std::pair<std::string, std::string>, Entry> cells;
  std::vector<std::string> regions, extra_methods;
  for (const auto& path : a.summaries) {
    ordered_json j;
    try {
      std::ifstream in(path);
      j = ordered_json::parse(in);
    } catch (const std::exception& e) {
      fail(ErrorKind::validation, path + ": not a valid summary JSON");
    }
    for (const char* key : {"method", "region", "auc", "ap"})
      if (!j.contains(key)) fail(ErrorKind::validation, path + ": summary lacks '" + key + "'");
    if (!j["method"].is_string() || !j["region"].is_string() || !j["auc"].is_number() || !j["ap"].is_number())
      fail(ErrorKind::validation, path + ": summary fields have the wrong type");
    const std::string method = j["method"], region = j["region"];
    if (std::find(regions.begin(), regions.end(), region) == regions.end()) regions.push_back(region);
    const auto key = std::make_pair(method, region);
    if (cells.count(key)) err << "warning: duplicate " << method << "/" << region << ", using " << path << "\n";
    cells[key] = Entry{j["ap"].get<double>(), j["auc"].get<double>()};
    if (!parse_method(method) &&
        std::find(extra_methods.begin(), extra_methods.end(), method) == extra_methods.end())
      extra_methods.push_back(method);
  }

  std::vector<std::string> methods;
  for (Method m : {Method::sam, Method::mf, Method::ace, Method::cem, Method::nn}) {
    const std::string name(to_string(m));
    for (const auto& r : regions)
      if (cells.count({name, r})) {
        methods.push_back(name);
        break;
      }
  }
  methods.insert(methods.end(), extra_methods.begin(), extra_methods.end());

  auto lookup = [&](const std::string& m, const std::string& r, bool ap) -> std::optional<double> {
    const auto it = cells.find({m, r});
    if (it == cells.end()) return std::nullopt;
    return ap ? it->second.ap : it->second.auc;
  };

  std::size_t name_w = 6;
  for (const auto& m : methods) name_w = std::max(name_w, m.size());
  std::size_t col_w = 7;
  for (const auto& r : regions) col_w = std::max(col_w, r.size() + 4);
  auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };

  std::string text = pad("method", name_w);
  for (const auto& r : regions) text += "  " + pad(r + " AP", col_w) + "  " + pad(r + " AUC", col_w);
  text += "\n";
  std::string csv = "method";
  for (const auto& r : regions) csv += "," + r + " AP," + r + " AUC";
  csv += "\n";
  for (const auto& m : methods) {
    std::string line = pad(m, name_w);
    csv += m;
    for (const auto& r : regions) {
      const std::string ap = cell(lookup(m, r, true)), auc = cell(lookup(m, r, false));
      line += "  " + pad(ap, col_w) + "  " + pad(auc, col_w);
      csv += "," + ap + "," + auc;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    text += line + "\n";
    csv += "\n";
  }
  if (!a.csv.empty()) {
    const fs::path p(a.csv);
    Outputs outputs(p.has_parent_path() ? p.parent_path() : fs::path("."));
    outputs.add(p.filename().string(), csv);
    outputs.commit(err);
  }
  out << text;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hyperspectral target detection: classical detectors, spectral network, ROC/PR evaluation"};
  app.name(args.empty() ? "hsd" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress the per-stage log on stderr");

  DetectArgs detect;
  auto* d = app.add_subcommand("detect", "Score a region with SAM, MF, ACE or CEM");
  d->add_option("--cube", detect.cube, "Cube header (.hdr) or raster path")->required();
  d->add_option("--signature", detect.signature, "Target signature CSV")->required();
  d->add_option("--method", detect.method, "Detector: sam, mf, ace or cem")->capture_default_str();
  d->add_option("--mask", detect.mask, "Ground-truth mask (needed by --exclude-positives)");
  d->add_option("-o,--out", detect.out, "Output directory")->capture_default_str();
  detect.region.add_to(d, "scored");
  auto* stats_group = d->add_option_group("background", "Background statistics region (default: scored region)");
  stats_group->add_option("--stats-region", detect.stats_region.name, "Named background region");
  stats_group->add_option("--stats-window", detect.stats_region.window,
                          "Background region as LINE,SAMPLE,LINES,SAMPLES")
      ->delimiter(',')
      ->expected(4);
  d->add_flag("--centered-cem", detect.centered_cem, "CEM on mean-removed data with the centered second moment");
  d->add_flag("--exclude-positives", detect.exclude_positives, "Leave mask targets out of the background statistics");
  d->add_flag("--raw", detect.raw, "Keep raw MF/ACE/CEM scores (no min-max normalization)");
  d->add_option("--load-background", detect.load_background, "Reuse a saved background model instead of estimating");
  d->add_option("--save-background", detect.save_background, "Also write the background model under this file name in the output directory");
  d->add_option("--parallel", detect.parallel, "Worker threads; results do not depend on this")
      ->capture_default_str()
      ->check(CLI::Range(1u, 256u));

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "ROC, PR and log-FPR curves with AUC and AP for a score map");
  e->add_option("--scores", eval.scores, "Score map header (.hdr)")->required();
  e->add_option("--mask", eval.mask, "Ground-truth mask covering the cube or the scored region")->required();
  e->add_option("-o,--out", eval.out, "Output directory")->capture_default_str();
  e->add_option("--label", eval.label, "Output file stem (default <method>_<region>)");
  e->add_flag("--svg", eval.svg, "Also write ROC, log-ROC and PR plots as SVG");
  e->add_option("--log-fpr-min", eval.log_fpr_min, "Smallest FPR of the log-spaced resample grid")->capture_default_str();
  e->add_option("--log-points", eval.log_points, "Points in the log-spaced resample grid")->capture_default_str();

  TrainArgs train;
  auto* t = app.add_subcommand("train-nn", "Train the spectral network on a labelled region");
  t->add_option("--cube", train.cube, "Cube header (.hdr) or raster path")->required();
  t->add_option("--mask", train.mask, "Ground-truth mask covering the cube")->required();
  t->add_option("-o,--out", train.out, "Output directory (nn_model.bin, nn_loss.csv, nn_train.json)")->capture_default_str();
  train.region.add_to(t, "training");
  t->add_option("--seed", train.seed, "Seed for initialization and batch shuffling")->capture_default_str();
  t->add_option("--epochs", train.epochs, "Training epochs")->capture_default_str();
  t->add_option("--batch-size", train.batch, "Mini-batch size")->capture_default_str();
  t->add_option("--lr", train.lr, "Adam learning rate")->capture_default_str();
  t->add_option("--positive-weight", train.positive_weight, "Loss weight of target pixels (default N_neg / N_pos)");
  t->add_flag("--no-standardize", train.no_standardize, "Feed raw spectra instead of per-band standardized ones");
  t->add_option("--parallel", train.parallel, "Worker threads; results do not depend on this")
      ->capture_default_str()
      ->check(CLI::Range(1u, 256u));

  ScoreNnArgs score;
  auto* s = app.add_subcommand("score-nn", "Score a region with a trained spectral network");
  s->add_option("--cube", score.cube, "Cube header (.hdr) or raster path")->required();
  s->add_option("--model", score.model, "Model file written by train-nn")->required();
  s->add_option("-o,--out", score.out, "Output directory")->capture_default_str();
  score.region.add_to(s, "scored");
  s->add_option("--parallel", score.parallel, "Worker threads; results do not depend on this")
      ->capture_default_str()
      ->check(CLI::Range(1u, 256u));

  SynthArgs syn;
  auto* y = app.add_subcommand("synth", "Write a seeded synthetic scene (cube, mask, signature, regions)");
  y->add_option("-o,--out", syn.out, "Output directory")->capture_default_str();
  y->add_option("--lines", syn.lines, "Scene lines")->capture_default_str();
  y->add_option("--samples", syn.samples, "Scene samples")->capture_default_str();
  y->add_option("--bands", syn.bands, "Spectral bands")->capture_default_str();
  y->add_option("--seed", syn.seed, "Seed for every random draw")->capture_default_str();
  y->add_option("--plants", syn.plants, "Number of target pixels")->capture_default_str();
  y->add_option("--deflection", syn.deflection, "Matched-filter deflection of the weakest target")->capture_default_str();
  y->add_option("--abundance-spread", syn.spread, "Largest abundance as a multiple of the smallest (capped at 1)")->capture_default_str();
  y->add_option("--noise", syn.noise, "White noise sigma added to every pixel")->capture_default_str();
  y->add_option("--split", syn.split, "Train/test boundary sample (default samples / 2)");
  y->add_flag("--contamination", syn.contamination, "Scale the background deviation of 5% of pixels by 3");

  ReportArgs report;
  auto* r = app.add_subcommand("report", "Tabulate AP and AUC per method and region from eval summaries");
  r->add_option("summaries", report.summaries, "Summary JSON files; a later file wins on duplicates")->required();
  r->add_option("--csv", report.csv, "Also write the table as CSV to this path");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  if (!argv_rev.empty()) argv_rev.pop_back();
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& ex) {
    if (ex.get_exit_code() == 0) {
      CLI::App* sub = nullptr;
      for (auto* c : app.get_subcommands()) sub = c;
      out << (sub ? sub->help() : app.help());
      return kOk;
    }
    err << app.get_name() << ": " << ex.what() << "\n";
    return kInvalidInput;
  }

  std::ostringstream sink;
  std::ostream& log = quiet ? static_cast<std::ostream&>(sink) : err;
  try {
    if (d->parsed()) run_detect(detect, log);
    else if (e->parsed()) run_eval(eval, out, log);
    else if (t->parsed()) run_train(train, log);
    else if (s->parsed()) run_score_nn(score, log);
    else if (y->parsed()) run_synth(syn, log);
    else if (r->parsed()) run_report(report, out, err);
  } catch (const Error& ex) {
    err << app.get_name() << ": " << to_string(ex.kind()) << " error: " << ex.what() << "\n";
    return ex.kind() == ErrorKind::validation ? kInvalidInput : kRuntimeFailure;
  } catch (const std::exception& ex) {
    err << app.get_name() << ": error: " << ex.what() << "\n";
    return kRuntimeFailure;
  }
  return kOk;
}

}  // namespace hsd::cli
