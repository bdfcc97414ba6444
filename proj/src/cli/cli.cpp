#include "atelier/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>

#include "atelier/codec.hpp"
#include "atelier/config.hpp"
#include "atelier/imaging.hpp"

namespace atelier::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool is_config_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::ValidationError:
    case ErrorCode::InvalidGeometry:
    case ErrorCode::SpecOutOfBounds:
    case ErrorCode::TargetUnreachable:
      return true;
    default:
      return false;
  }
}

void require_path(const fs::path& p, const char* what) {
  if (p.empty()) throw Error(ErrorCode::ValidationError, std::string(what) + " path is not set");
}

json params_json(const pairsynth::DegradationParams& p) {
  return {{"blur_sigma", p.blur_sigma},
          {"noise_sigma", p.noise_sigma},
          {"filter", std::string(imaging::to_string(p.filter))},
          {"jpeg_quality", p.jpeg_quality},
          {"noise_seed", p.noise_seed}};
}

json provenance_json(const pairsynth::Provenance& pv) {
  json j = {{"source_id", pv.source_id},
            {"coord", {{"x", pv.coord.x}, {"y", pv.coord.y}}},
            {"seed", pv.seed},
            {"params", params_json(pv.params)}};
  if (pv.augment) {
    j["augment"] = {{"hflip", pv.augment->hflip},
                    {"vflip", pv.augment->vflip},
                    {"quarter_turns", pv.augment->quarter_turns},
                    {"brightness", pv.augment->brightness},
                    {"contrast", pv.augment->contrast}};
  }
  return j;
}

ImageInfo plan_geometry(const JobConfig& cfg) {
  if (cfg.canvas) return ImageInfo{cfg.canvas->first, cfg.canvas->second, Layout::RGB, Depth::U8, AlphaMode::None};
  require_path(cfg.input, "input");
  return read_png_info(cfg.input);
}

json cmd_plan(const JobConfig& cfg) {
  const ImageInfo in = plan_geometry(cfg);
  auto refiner = make_refiner(cfg.refiner);
  const auto& caps = refiner->capabilities();
  std::vector<std::string> notes;
  const auto stages = tiler::resolve_stages(in.width, in.height, cfg.schedule, caps, cfg.target_scale, &notes);
  const auto scale = static_cast<std::size_t>(caps.scale_factor);
  json list = json::array();
  ImageInfo cur = in;
  std::size_t total_tiles = 0, in_memory = 0;
  for (const auto& st : stages) {
    ImageInfo next = cur;
    next.width = st.out_w;
    next.height = st.out_h;
    json j = {{"step", st.step}, {"input", {cur.width, cur.height}}, {"output", {next.width, next.height}}};
    std::size_t footprint = 0;
    if (st.kind == tiler::Stage::Kind::Resample) {
      j["kind"] = "resample";
      footprint = resample_footprint(cur, st.out_w, st.out_h, imaging::ResampleFilter::Lanczos3);
    } else {
      const auto stats = tiler::plan_stats(cur, st.pass, scale, cfg.parallelism);
      j["kind"] = "refine";
      j["name"] = st.pass.name;
      j["denoise"] = st.pass.denoise;
      j["tile"] = st.pass.tile;
      j["overlap"] = st.pass.overlap;
      j["pad"] = st.pass.pad;
      j["grid"] = {stats.cols, stats.rows};
      j["tiles"] = stats.tiles;
      j["padded_tile"] = {stats.padded_w, stats.padded_h};
      j["fallback"] = st.fallback;
      total_tiles += stats.tiles;
      footprint = stats.footprint;
    }
    j["footprint_bytes"] = footprint;
    in_memory = std::max(in_memory, cur.byte_size() + next.byte_size() + footprint);
    list.push_back(std::move(j));
    cur = next;
  }
  return {{"input", {in.width, in.height}},
          {"output", {cur.width, cur.height}},
          {"refiner", refiner::to_json(caps)},
          {"stages", std::move(list)},
          {"total_tiles", total_tiles},
          {"memory", {{"in_memory_peak_bytes", in_memory},
                      {"streaming_minimum_bytes", tiler::minimum_budget(in, stages, scale, cfg.parallelism)}}},
          {"notes", notes}};
}

json cmd_upscale(const JobConfig& cfg) {
  require_path(cfg.input, "input");
  require_path(cfg.output, "output");
  auto refiner = make_refiner(cfg.refiner);
  tiler::RunReport report;
  if (cfg.memory_budget) {
    tiler::StreamOptions opts;
    opts.parallelism = cfg.parallelism;
    report = tiler::stream_process(cfg.input, cfg.output, cfg.schedule, *refiner, cfg.target_scale,
                                   *cfg.memory_budget, opts);
  } else {
    const ImageBuffer input = read_png(cfg.input);
    MemoryMeter meter;
    tiler::RunOptions opts{cfg.parallelism, &meter};
    const ImageBuffer out = tiler::run_schedule(input, cfg.schedule, *refiner, cfg.target_scale, opts, &report);
    write_png(cfg.output, out);
  }
  json j = report.to_json();
  j["output_path"] = cfg.output.string();
  return j;
}

json cmd_degrade_pairs(const JobConfig& cfg, std::vector<std::string>& warnings) {
  const auto& ps = cfg.pairsynth;
  if (ps.sources.empty()) throw Error(ErrorCode::ValidationError, "pairsynth.sources is empty");
  require_path(ps.out_dir, "pairsynth.out_dir");
  std::vector<pairsynth::SourceImage> sources;
  for (std::size_t i = 0; i < ps.sources.size(); ++i) {
    ImageBuffer img = read_png(ps.sources[i]);
    if (img.layout() == Layout::RGBA) {
      warnings.push_back(ps.sources[i].string() + ": alpha dropped for pair synthesis");
      img = imaging::convert_layout(img, Layout::RGB);
    }
    pairsynth::SourceImage src;
    src.id = ps.sources[i].stem().string();
    src.image = std::make_shared<const ImageBuffer>(std::move(img));
    if (ps.masks[i]) {
      ImageBuffer mask = read_png(*ps.masks[i]);
      if (mask.layout() != Layout::Luma) mask = imaging::to_luma(mask);
      src.mask = std::make_shared<const ImageBuffer>(std::move(mask));
    }
    sources.push_back(std::move(src));
  }
  fs::create_directories(ps.out_dir);
  pairsynth::PairStream stream(std::move(sources), ps.patch, ps.degradation, cfg.seed);
  json pairs = json::array();
  for (std::size_t i = 0; i < ps.count; ++i) {
    pairsynth::TrainingPair pair = stream.next();
    if (ps.augment) pair = pairsynth::augment_pair(pair, *ps.augment, pair.provenance.seed);
    char idx[32];
    std::snprintf(idx, sizeof idx, "%05zu", i);
    const std::string stem = pair.provenance.source_id + "_" + idx;
    write_png(ps.out_dir / (stem + "_hr.png"), pair.hr);
    write_png(ps.out_dir / (stem + "_lr.png"), pair.lr);
    json pv = provenance_json(pair.provenance);
    std::ofstream(ps.out_dir / (stem + ".json")) << pv.dump(2) << "\n";
    pairs.push_back({{"id", stem}, {"provenance", std::move(pv)}});
  }
  return {{"out_dir", ps.out_dir.string()}, {"count", ps.count}, {"patch", ps.patch}, {"pairs", std::move(pairs)}};
}

json cmd_augment(const JobConfig& cfg) {
  require_path(cfg.augment.input, "augment.input");
  require_path(cfg.augment.output, "augment.output");
  const ImageBuffer img = read_png(cfg.augment.input);
  if (img.layout() != Layout::RGBA) {
    throw Error(ErrorCode::MissingAlphaChannel, cfg.augment.input.string() + " has no alpha channel");
  }
  const ImageBuffer out = stencil::alpha_safe_transform(img, cfg.augment.spec);
  write_png(cfg.augment.output, out);
  const auto& s = cfg.augment.spec;
  return {{"output_path", cfg.augment.output.string()},
          {"size", {out.width(), out.height()}},
          {"spec", {{"hflip", s.hflip}, {"vflip", s.vflip}, {"quarter_turns", s.quarter_turns},
                    {"rotation_deg", s.rotation_deg}, {"scale_factor", s.scale_factor},
                    {"brightness", s.brightness}, {"contrast", s.contrast},
                    {"grain_sigma", s.grain_sigma}, {"seed", s.seed}}}};
}

json cmd_composite(const JobConfig& cfg) {
  const auto& c = cfg.composite;
  require_path(c.output, "composite.output");
  if (c.width == 0 || c.height == 0) throw Error(ErrorCode::ValidationError, "composite.width and height must be positive");
  std::vector<stencil::Placement> placements;
  json layers = json::array();
  for (const auto& item : c.placements) {
    stencil::Placement p;
    p.asset = stencil::validate_asset(item.asset);
    p.x = item.x;
    p.y = item.y;
    p.scale = item.scale;
    layers.push_back({{"asset", item.asset.string()}, {"z_role", std::string(stencil::to_string(p.asset.z_role))}});
    placements.push_back(std::move(p));
  }
  const ImageBuffer out = stencil::composite_assets(placements, c.width, c.height);
  write_png(c.output, out);
  return {{"output_path", c.output.string()}, {"size", {out.width(), out.height()}}, {"layers", std::move(layers)}};
}

json cmd_dataset(const JobConfig& cfg, const std::string& action) {
  const auto& d = cfg.dataset;
  require_path(d.root, "dataset.root");
  const auto scanned = dataset::scan(d.root, d.kind_rule, d.buckets);
  json issues = scanned.to_json()["issues"];
  json result;
  if (action == "scan") {
    result = scanned.to_json();
  } else if (action == "audit") {
    result = dataset::audit_ratio(scanned.records, d.audit).to_json();
  } else if (action == "expand") {
    require_path(d.out_dir, "dataset.out_dir");
    const auto expanded = dataset::hflip_expand(scanned.records, d.out_dir);
    result = {{"records_in", scanned.records.size()}, {"records_out", expanded.size()}, {"out_dir", d.out_dir.string()}};
  } else if (action == "curriculum") {
    result = dataset::curriculum_manifest(scanned.records, d.curriculum).to_json();
    if (!d.manifest.empty()) std::ofstream(d.manifest) << result.dump(2) << "\n";
  } else {
    throw Error(ErrorCode::ValidationError, "dataset action must be scan, audit, expand or curriculum");
  }
  result["issues"] = std::move(issues);
  return result;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tiled refinement, training-pair synthesis, stencil and dataset tooling", "atelier"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::string config_path;
  Overrides ov;
  std::uint64_t seed = 0;
  std::size_t parallelism = 0;
  std::string endpoint, input, output;
  double target_scale = 0.0;
  bool dry_run = false;
  app.add_option("--config", config_path, "Job config (JSON)");
  auto* seed_opt = app.add_option("--seed", seed, "Global seed");
  auto* par_opt = app.add_option("--parallelism", parallelism, "Worker count")->check(CLI::PositiveNumber);
  auto* ep_opt = app.add_option("--refiner-endpoint", endpoint, "External refiner URL (overrides config)");
  auto* in_opt = app.add_option("--input", input, "Input image (overrides config)");
  auto* out_opt = app.add_option("--output", output, "Output image (overrides config)");
  auto* ts_opt = app.add_option("--target-scale", target_scale, "Upscale factor (overrides config)");
  app.add_flag("--dry-run", dry_run, "Plan without refining");

  auto* upscale = app.add_subcommand("upscale", "Multi-pass tiled upscale");
  auto* plan = app.add_subcommand("plan", "Print tile plans and memory estimates");
  auto* degrade = app.add_subcommand("degrade-pairs", "Synthesize HR/LR training pairs");
  auto* augment = app.add_subcommand("augment", "Alpha-safe augmentation of one RGBA asset");
  auto* composite = app.add_subcommand("composite", "Layer stencil assets onto a canvas");
  auto* ds = app.add_subcommand("dataset", "Sidecar-caption dataset tools");
  std::string action;
  ds->add_option("action", action, "scan | audit | expand | curriculum")->required();

  std::string command = "atelier";
  json report;
  std::vector<std::string> warnings;
  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      app.exit(e, out, err);
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      throw Error(ErrorCode::ParseError, e.what());
    }
    for (auto* sub : app.get_subcommands()) command = sub->get_name();
    if (*seed_opt) ov.seed = seed;
    if (*par_opt) ov.parallelism = parallelism;
    if (*ep_opt) ov.refiner_endpoint = endpoint;
    if (*in_opt) ov.input = input;
    if (*out_opt) ov.output = output;
    JobConfig cfg = config_path.empty() ? default_config(ov) : load_config(config_path, ov);
    if (*ts_opt) {
      if (!(target_scale >= 1.0)) throw Error(ErrorCode::ValidationError, "--target-scale must be >= 1");
      cfg.target_scale = target_scale;
    }
    warnings = cfg.warnings;
    json result;
    if (*plan || (*upscale && dry_run)) {
      result = cmd_plan(cfg);
    } else if (*upscale) {
      result = cmd_upscale(cfg);
    } else if (*degrade) {
      result = cmd_degrade_pairs(cfg, warnings);
    } else if (*augment) {
      result = cmd_augment(cfg);
    } else if (*composite) {
      result = cmd_composite(cfg);
    } else if (*ds) {
      result = cmd_dataset(cfg, action);
    }
    report = {{"command", command}, {"status", "ok"}, {"warnings", warnings}, {"result", std::move(result)}};
    out << report.dump(2) << "\n";
    return kExitOk;
  } catch (const Error& e) {
    report = {{"command", command},
              {"status", "error"},
              {"warnings", warnings},
              {"error", {{"code", to_string(e.code())}, {"message", e.what()}}}};
    err << "atelier: " << to_string(e.code()) << ": " << e.what() << "\n";
    out << report.dump(2) << "\n";
    return is_config_error(e.code()) ? kExitConfig : kExitOperational;
  } catch (const std::exception& e) {
    report = {{"command", command},
              {"status", "error"},
              {"warnings", warnings},
              {"error", {{"code", "InternalError"}, {"message", e.what()}}}};
    err << "atelier: " << e.what() << "\n";
    out << report.dump(2) << "\n";
    return kExitOperational;
  }
}

}  // namespace atelier::cli
