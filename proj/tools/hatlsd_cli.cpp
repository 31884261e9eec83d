// hatlsd command line tool.
//
// Exit codes: 0 ok, 1 usage or bad parameter, 2 I/O failure, 3 malformed
// input (field, image, JSON or geometry).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hatlsd/hatlsd.hpp"

namespace fs = std::filesystem;
using namespace hatlsd;

namespace {

struct Options {
  std::string config_path;
  std::vector<std::string> sets;
  unsigned jobs = 1;
};

Config load_effective_config(const Options& o) {
  Config cfg;
  std::string path = o.config_path;
  if (path.empty())
    if (const char* env = std::getenv("HATLSD_CONFIG"); env && *env) path = env;
  if (!path.empty()) cfg = load_config(path);
  for (const auto& s : o.sets) apply_override(cfg, s);
  cfg.validate();
  return cfg;
}

Size parse_size(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw ParamError("size must look like HxW, got '" + s + "'");
  const int h = detail::parse_number<int>("size", std::string_view(s).substr(0, x));
  const int w = detail::parse_number<int>("size", std::string_view(s).substr(x + 1));
  if (h <= 0 || w <= 0) throw ParamError("size must be positive");
  return {h, w};
}

std::vector<LineSegment> read_gt_segments(const fs::path& p) {
  const Json j = read_json(p);
  if (j.is_array()) return segments_from_json(j);
  if (!j.is_object() || !j.contains("segments")) throw FormatError("ground truth JSON needs a segments array");
  return segments_from_json(j["segments"]);
}

struct ProviderChoice {
  std::unique_ptr<FieldProvider> provider;
  Json description;
};

ProviderChoice make_provider(const std::string& spec, double theta_noise_deg, const Config& cfg) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  ProviderChoice out;
  if (kind == "file") {
    if (arg.empty()) throw ParamError("file provider needs a path: file:FIELD.hatf");
    out.provider = std::make_unique<FileFieldProvider>(fs::path(arg));
    out.description = {{"kind", "file"}, {"path", fs::path(arg).filename().string()}};
  } else if (kind == "gt") {
    if (arg.empty()) throw ParamError("gt provider needs a path: gt:GT.json");
    const double sigma = theta_noise_deg * std::numbers::pi / 180.0;
    out.provider = std::make_unique<GtFieldProvider>(read_gt_segments(arg), cfg.fg_halfwidth, sigma, cfg.seed);
    out.description = {{"kind", "gt"}, {"path", fs::path(arg).filename().string()},
                       {"theta_noise_deg", theta_noise_deg}};
  } else if (kind == "heuristic") {
    out.provider = std::make_unique<GradientFieldProvider>(cfg.lsd, cfg.fg_halfwidth);
    out.description = {{"kind", "heuristic"}};
  } else {
    throw ParamError("unknown provider '" + spec + "' (use file:PATH, gt:PATH or heuristic)");
  }
  if (theta_noise_deg != 0.0 && kind != "gt") throw ParamError("--theta-noise only applies to the gt provider");
  return out;
}

Json base_meta(const std::string& method, const DetectionResult& det, const Config& cfg, Size size) {
  return {{"method", method}, {"score_kind", det.score_kind}, {"seed", cfg.seed},
          {"width", size.width}, {"height", size.height}};
}

void maybe_write_svg(const std::string& svg_path, const DetectionResult& det, Size size) {
  if (!svg_path.empty()) write_text(svg_path, render_svg(det, size));
}

// ---------------------------------------------------------------- detect
struct DetectArgs {
  std::string image, method = "lsd", field, out, svg;
};

int cmd_detect(const DetectArgs& a, const Config& cfg) {
  if (a.method == "field" && a.field.empty()) throw ParamError("--method field requires --field");
  const GrayImage img = load_image(a.image);
  DetectionResult det;
  Json meta;
  if (a.method == "lsd") {
    det = lsd_detect(img, cfg.lsd);
    meta = base_meta("lsd", det, cfg, img.size());
    meta["params"] = lsd_params_json(cfg.lsd);
  } else {
    const FieldPair fp = load_field_pair(a.field);
    if (fp.field.size() != img.size()) throw GeometryError("field dimensions do not match image");
    det = sparse_decode(fp, cfg.decode);
    meta = base_meta("field", det, cfg, img.size());
    meta["params"] = decode_params_json(cfg.decode);
  }
  write_json(a.out, detection_json(det, fs::path(a.image).filename().string(), meta));
  maybe_write_svg(a.svg, det, img.size());
  return 0;
}

// ---------------------------------------------------------------- codec
struct EncodeArgs {
  std::string gt, size, out;
};

int cmd_encode(const EncodeArgs& a, const Config& cfg) {
  const Size size = parse_size(a.size);
  const auto segs = read_gt_segments(a.gt);
  save_field_pair(encode(segs, size, cfg.fg_halfwidth), a.out);
  return 0;
}

struct DecodeArgs {
  std::string field, junctions, out, svg;
};

int cmd_decode(const DecodeArgs& a, const Config& cfg) {
  const FieldPair fp = load_field_pair(a.field, a.junctions);
  const DetectionResult det = sparse_decode(fp, cfg.decode);
  Json meta = base_meta("field", det, cfg, fp.field.size());
  meta["params"] = decode_params_json(cfg.decode);
  write_json(a.out, detection_json(det, fs::path(a.field).filename().string(), meta));
  maybe_write_svg(a.svg, det, fp.field.size());
  return 0;
}

// ---------------------------------------------------------------- pseudo labels
struct PseudoArgs {
  std::string image, field, provider, out, svg;
  double theta_noise = 0.0;
  int iters = 0;
};

ProviderChoice provider_for(const PseudoArgs& a, const Config& cfg) {
  if (!a.field.empty() && !a.provider.empty()) throw ParamError("give either FIELD or --provider, not both");
  if (a.field.empty() && a.provider.empty()) throw ParamError("a FIELD or --provider is required");
  return make_provider(a.field.empty() ? a.provider : "file:" + a.field, a.theta_noise, cfg);
}

Json pseudo_json(const DetectionResult& det, const std::string& image, const std::string& source,
                 const Json& params, const Json& meta) {
  Json j = detection_json(det, image, meta);
  Json out;
  out["image"] = j["image"];
  out["source"] = source;
  out["params"] = params;
  out["segments"] = j["segments"];
  out["meta"] = j["meta"];
  return out;
}

void print_time(double seconds) {
  std::printf("time_s %.6f\n", seconds);
  std::fflush(stdout);
}

int cmd_rectify(const PseudoArgs& a, const Config& cfg) {
  const GrayImage img = load_image(a.image);
  const auto choice = provider_for(a, cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const DetectionResult det = generate_pseudo_labels(*choice.provider, img, cfg.pseudo, cfg.lsd);
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const Json params = {{"provider", choice.description}, {"decode", decode_params_json(cfg.pseudo)},
                       {"lsd", lsd_params_json(cfg.lsd)}};
  Json meta = base_meta("rectifier", det, cfg, img.size());
  write_json(a.out, pseudo_json(det, fs::path(a.image).filename().string(), "rectifier", params, meta));
  maybe_write_svg(a.svg, det, img.size());
  print_time(dt);
  return 0;
}

int cmd_adapt(const PseudoArgs& a, const Config& cfg) {
  const GrayImage img = load_image(a.image);
  const auto choice = provider_for(a, cfg);
  AdaptParams params = cfg.adapt_params();
  if (a.iters > 0) params.n_iters = a.iters;
  params.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const DetectionResult det = homographic_adaptation(*choice.provider, img, params, cfg.pseudo, cfg.seed);
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const Json pj = {{"provider", choice.description}, {"decode", decode_params_json(cfg.pseudo)},
                   {"adapt", adapt_params_json(params)}};
  Json meta = base_meta("homographic_adaptation", det, cfg, img.size());
  write_json(a.out, pseudo_json(det, fs::path(a.image).filename().string(), "homographic_adaptation", pj, meta));
  maybe_write_svg(a.svg, det, img.size());
  print_time(dt);
  return 0;
}

// ---------------------------------------------------------------- synth
struct SynthArgs {
  std::string kind = "all", out, format = "pgm";
  int count = 1;
  std::optional<std::uint64_t> seed;
};

int cmd_synth(const SynthArgs& a, const Config& cfg, unsigned jobs) {
  if (a.count < 0) throw ParamError("--count must be >= 0");
  if (a.format != "pgm" && a.format != "png") throw ParamError("--format must be pgm or png");
  std::optional<PrimitiveKind> fixed;
  if (a.kind != "all") fixed = parse_primitive_kind(a.kind);
  const std::uint64_t seed0 = a.seed.value_or(cfg.seed);
  fs::create_directories(a.out);
  parallel_map(static_cast<std::size_t>(a.count), jobs, [&](std::size_t i) {
    const std::uint64_t seed = seed0 + i;
    const PrimitiveKind kind = fixed ? *fixed : kAllPrimitiveKinds[seed % kAllPrimitiveKinds.size()];
    const SyntheticSample s = render_synthetic(PrimitiveSpec::defaults(kind), seed);
    char stem[64];
    std::snprintf(stem, sizeof stem, "%s_%05zu", std::string(to_string(kind)).c_str(), i);
    const std::string image_name = std::string(stem) + "." + a.format;
    save_image(s.image, fs::path(a.out) / image_name);
    const Json sidecar = {{"image", image_name}, {"kind", std::string(to_string(kind))}, {"seed", seed},
                          {"width", s.image.width()}, {"height", s.image.height()},
                          {"segments", segments_json(s.segments)}};
    write_json(fs::path(a.out) / (std::string(stem) + ".json"), sidecar);
    return 0;
  });
  return 0;
}

// ---------------------------------------------------------------- eval
struct EvalArgs {
  std::string pred_dir, mode = "provided", out, table;
  double k = 5.0;
};

std::vector<fs::path> sorted_entries(const fs::path& dir, auto&& keep) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && keep(e.path())) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

int cmd_eval(const EvalArgs& a, const Config& cfg, unsigned jobs) {
  if (!(a.k > 0.0)) throw ParamError("--k must be positive");
  const fs::path dir = a.pred_dir;
  std::vector<std::string> names;
  std::vector<PairReport> reports;
  if (a.mode == "provided") {
    for (const auto& p : sorted_entries(dir, [](const fs::path& p) { return ends_with(p.filename().string(), ".a.json"); })) {
      const std::string f = p.filename().string();
      names.push_back(f.substr(0, f.size() - 7));
    }
    reports = parallel_map(names.size(), jobs, [&](std::size_t i) {
      const fs::path hp = dir / (names[i] + ".h.json");
      if (!fs::exists(hp)) throw IoError("missing homography for pair " + names[i] + ": " + hp.string());
      const auto da = detection_from_json(read_json(dir / (names[i] + ".a.json")));
      const auto db = detection_from_json(read_json(dir / (names[i] + ".b.json")));
      return evaluate_pair(da, db, homography_from_json(read_json(hp)), a.k);
    });
  } else if (a.mode == "random_warp") {
    const auto files = sorted_entries(dir, [](const fs::path& p) {
      return p.extension() == ".pgm" || p.extension() == ".png";
    });
    for (const auto& f : files) names.push_back(f.filename().string());
    reports = parallel_map(files.size(), jobs, [&](std::size_t i) {
      const GrayImage img = load_image(files[i]);
      const auto pair = build_pairs({img}, PairMode::random_warp, cfg.sample, mix_seed(cfg.seed, i)).front();
      return evaluate_pair(lsd_detect(pair.img_a, cfg.lsd), lsd_detect(pair.img_b, cfg.lsd), pair.h_ab, a.k);
    });
  } else {
    throw ParamError("--mode must be provided or random_warp");
  }
  const MetricsReport r = aggregate(reports, a.k);
  Json j = report_json(r);
  j["mode"] = a.mode;
  j["seed"] = cfg.seed;
  j["pairs"] = names;
  if (!a.out.empty()) write_json(a.out, j);
  const std::string table = format_table(r);
  if (!a.table.empty()) write_text(a.table, table);
  std::cout << table;
  return 0;
}

// ---------------------------------------------------------------- svg
struct SvgArgs {
  std::string json, image, out;
  bool underlay = true;
};

int cmd_svg(const SvgArgs& a) {
  const Json j = read_json(a.json);
  const DetectionResult det = detection_from_json(j);
  if (!a.image.empty()) {
    const GrayImage img = load_image(a.image);
    write_text(a.out, render_svg(det, img.size(), a.underlay ? &img : nullptr));
    return 0;
  }
  Size size = svg_extent(det);
  if (j.contains("meta") && j["meta"].is_object()) {
    const auto& m = j["meta"];
    if (m.contains("width") && m.contains("height") && m["width"].is_number_integer() &&
        m["height"].is_number_integer())
      size = {m["height"].get<int>(), m["width"].get<int>()};
  }
  write_text(a.out, render_svg(det, size));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hatlsd: line segment detection, HAT field codec, pseudo-labels and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opt;
  app.add_option("--config", opt.config_path, "key = value config file (default: $HATLSD_CONFIG)");
  app.add_option("--set", opt.sets, "override a config key, key=value (repeatable)");
  app.add_option("--jobs", opt.jobs, "worker threads for batch commands (0 = all cores)");

  DetectArgs det;
  auto* detect = app.add_subcommand("detect", "detect segments in an image");
  detect->add_option("image", det.image, "PGM or PNG image")->required();
  detect->add_option("--method", det.method, "lsd or field")->check(CLI::IsMember({"lsd", "field"}));
  detect->add_option("--field", det.field, "HATF file (junctions read from the sibling .junc)");
  detect->add_option("--out", det.out, "output JSON")->required();
  detect->add_option("--svg", det.svg, "optional SVG overlay");

  EncodeArgs enc;
  auto* encode_cmd = app.add_subcommand("encode", "encode ground-truth segments into a field");
  encode_cmd->add_option("gt", enc.gt, "ground-truth JSON")->required();
  encode_cmd->add_option("--size", enc.size, "HxW")->required();
  encode_cmd->add_option("--out", enc.out, "output .hatf (the .junc is written beside it)")->required();

  DecodeArgs dec;
  auto* decode_cmd = app.add_subcommand("decode", "decode a field into segments");
  decode_cmd->add_option("field", dec.field, "HATF file")->required();
  decode_cmd->add_option("--junctions", dec.junctions, "JUNC file (default: sibling .junc)");
  decode_cmd->add_option("--out", dec.out, "output JSON")->required();
  decode_cmd->add_option("--svg", dec.svg, "optional SVG overlay");

  PseudoArgs rect, adapt;
  for (auto [name, args, help] : {std::tuple{"rectify", &rect, "pseudo-labels with the level-line rectifier"},
                                  std::tuple{"adapt", &adapt, "pseudo-labels with homographic adaptation"}}) {
    auto* sc = app.add_subcommand(name, help);
    sc->add_option("image", args->image, "PGM or PNG image")->required();
    sc->add_option("field", args->field, "HATF file (shorthand for --provider file:FIELD)");
    sc->add_option("--provider", args->provider, "file:PATH, gt:GT.json or heuristic");
    sc->add_option("--theta-noise", args->theta_noise, "gt provider: theta noise sigma in degrees");
    sc->add_option("--out", args->out, "output JSON")->required();
    sc->add_option("--svg", args->svg, "optional SVG overlay");
    if (std::string(name) == "adapt") sc->add_option("--iters", args->iters, "number of passes (default adapt.n_iters)");
  }

  SynthArgs syn;
  auto* synth = app.add_subcommand("synth", "render a synthetic corpus with ground truth");
  synth->add_option("--kind", syn.kind, "primitive kind or all");
  synth->add_option("--count", syn.count, "number of images");
  synth->add_option("--out", syn.out, "output directory")->required();
  synth->add_option("--seed", syn.seed, "seed of the first image (default: config seed)");
  synth->add_option("--format", syn.format, "pgm or png");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "repeatability evaluation");
  eval->add_option("--pred-dir", ev.pred_dir, "directory of predictions or images")->required();
  eval->add_option("--mode", ev.mode, "provided or random_warp");
  eval->add_option("--k", ev.k, "distance threshold in pixels");
  eval->add_option("--out", ev.out, "report JSON");
  eval->add_option("--table", ev.table, "also write the text table here");

  SvgArgs sv;
  auto* svg = app.add_subcommand("svg", "render detections as SVG");
  svg->add_option("json", sv.json, "detection JSON")->required();
  svg->add_option("image", sv.image, "optional image to embed underneath");
  svg->add_option("--out", sv.out, "output SVG")->required();
  svg->add_flag("!--no-underlay", sv.underlay, "do not embed the image");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const Config cfg = load_effective_config(opt);
    if (detect->parsed()) return cmd_detect(det, cfg);
    if (encode_cmd->parsed()) return cmd_encode(enc, cfg);
    if (decode_cmd->parsed()) return cmd_decode(dec, cfg);
    if (app.got_subcommand("rectify")) return cmd_rectify(rect, cfg);
    if (app.got_subcommand("adapt")) return cmd_adapt(adapt, cfg);
    if (synth->parsed()) return cmd_synth(syn, cfg, opt.jobs);
    if (eval->parsed()) return cmd_eval(ev, cfg, opt.jobs);
    if (svg->parsed()) return cmd_svg(sv);
  } catch (const IoError& e) {
    std::cerr << "hatlsd: " << e.what() << "\n";
    return 2;
  } catch (const ParamError& e) {
    std::cerr << "hatlsd: " << e.what() << "\n";
    return 1;
  } catch (const FormatError& e) {
    std::cerr << "hatlsd: " << e.what() << "\n";
    return 3;
  } catch (const GeometryError& e) {
    std::cerr << "hatlsd: " << e.what() << "\n";
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "hatlsd: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "hatlsd: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
