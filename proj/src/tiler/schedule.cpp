#include <chrono>
#include <cmath>
#include <sstream>

#include "atelier/codec.hpp"
#include "atelier/imaging.hpp"
#include "atelier/tiler.hpp"

namespace atelier::tiler {

const char* to_string(PathKind kind) { return kind == PathKind::GAN ? "gan" : "diffusion"; }

PathKind parse_path(const std::string& text) {
  if (text == "gan") return PathKind::GAN;
  if (text == "diffusion") return PathKind::Diffusion;
  throw Error(ErrorCode::ValidationError, "path must be \"gan\" or \"diffusion\", got \"" + text + "\"");
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::vector<std::string> PassSchedule::validate() const {
  std::vector<std::string> errors, warnings;
  if (passes.empty()) errors.push_back("schedule needs at least one pass");
  if (path == PathKind::GAN && passes.size() > 1) {
    errors.push_back("gan path takes exactly one pass, got " + std::to_string(passes.size()));
  }
  for (std::size_t i = 0; i < passes.size(); ++i) {
    const Pass& p = passes[i];
    const std::string who = "pass '" + p.name + "'";
    if (!(p.denoise >= 0.0 && p.denoise <= 1.0)) {
      errors.push_back(who + ": denoise " + fmt(p.denoise) + " outside [0,1]");
    }
    if (!(p.adapter_scale >= 0.0)) errors.push_back(who + ": adapter_scale must be >= 0");
    if (p.tile == 0) errors.push_back(who + ": tile must be positive");
    if (p.overlap >= p.tile) {
      errors.push_back(who + ": overlap " + std::to_string(p.overlap) + " must be smaller than tile " +
                       std::to_string(p.tile));
    }
    if (!kTileEnvelope.contains(static_cast<double>(p.tile))) {
      warnings.push_back(who + ": tile " + std::to_string(p.tile) + " outside recommended 512-1536");
    }
    if (!kOverlapEnvelope.contains(static_cast<double>(p.overlap))) {
      warnings.push_back(who + ": overlap " + std::to_string(p.overlap) +
                         " outside recommended 64-128");
    }
    if (path == PathKind::Diffusion && i < 3 && p.denoise >= 0.0 && p.denoise <= 1.0 &&
        !kPassEnvelopes[i].contains(p.denoise)) {
      warnings.push_back(who + ": denoise " + fmt(p.denoise) + " outside recommended " +
                         fmt(kPassEnvelopes[i].lo) + "-" + fmt(kPassEnvelopes[i].hi));
    }
  }
  for (double s : step_scales) {
    if (!(s >= 2.0 && s <= 4.0)) errors.push_back("step scale " + fmt(s) + " outside [2,4]");
  }
  if (!errors.empty()) {
    std::string msg = "invalid schedule:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw Error(ErrorCode::ValidationError, msg);
  }
  return warnings;
}

PassSchedule default_diffusion_schedule() {
  PassSchedule s;
  s.path = PathKind::Diffusion;
  const char* names[3] = {"A", "B", "C"};
  const double denoise[3] = {0.31, 0.20, 0.15};
  for (int i = 0; i < 3; ++i) {
    Pass p;
    p.name = names[i];
    p.denoise = denoise[i];
    p.adapter_scale = 1.0;
    p.tile = 1024;
    p.overlap = 96;
    p.pad = 16;
    p.seed = static_cast<std::uint64_t>(i);
    s.passes.push_back(p);
  }
  return s;
}

PassSchedule default_gan_schedule() {
  PassSchedule s;
  s.path = PathKind::GAN;
  Pass p;
  p.name = "gan";
  p.tile = 512;
  p.overlap = 64;
  p.pad = 16;
  s.passes.push_back(p);
  return s;
}

std::size_t target_dim(std::size_t dim, double target_scale) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(dim) * target_scale - 1e-9));
}

namespace {

void check_tiles(std::size_t w, std::size_t h, const Pass& pass,
                 const refiner::RefinerCapabilities& caps) {
  const TilePlan plan = plan_tiles(w, h, pass.tile, pass.overlap, pass.pad);
  if (plan.max_padded_w() > caps.max_tile_px || plan.max_padded_h() > caps.max_tile_px) {
    throw Error(ErrorCode::CapabilityExceeded,
                "pass '" + pass.name + "' sends " + std::to_string(plan.max_padded_w()) + "x" +
                    std::to_string(plan.max_padded_h()) + " tiles; " + caps.name + " admits " +
                    std::to_string(caps.max_tile_px));
  }
}

}  // namespace

std::vector<Stage> resolve_stages(std::size_t w, std::size_t h, const PassSchedule& schedule,
                                  const refiner::RefinerCapabilities& caps, double target_scale,
                                  std::vector<std::string>* notes) {
  schedule.validate();
  if (!(target_scale >= 1.0)) {
    throw Error(ErrorCode::ValidationError, "target_scale must be >= 1");
  }
  if (schedule.path == PathKind::Diffusion && caps.scale_factor != 1) {
    throw Error(ErrorCode::ValidationError, "diffusion path needs a scale-1 refiner, " + caps.name +
                                                " has scale " + std::to_string(caps.scale_factor));
  }
  std::vector<double> steps = schedule.step_scales;
  if (steps.empty()) {
    steps.push_back(schedule.path == PathKind::GAN ? static_cast<double>(caps.scale_factor)
                                                   : target_scale);
  }
  double product = 1.0;
  for (double s : steps) product *= s;
  if (product < target_scale - 1e-9) {
    throw Error(ErrorCode::TargetUnreachable, "step scales multiply to " + fmt(product) +
                                                  ", below target scale " + fmt(target_scale));
  }
  const std::size_t tw = target_dim(w, target_scale), th = target_dim(h, target_scale);

  std::vector<Stage> stages;
  std::size_t cw = w, ch = h;
  double cumulative = 1.0;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    cumulative *= steps[k];
    const bool last = cumulative >= target_scale - 1e-9;
    const std::size_t sw = last ? tw : target_dim(w, cumulative);
    const std::size_t sh = last ? th : target_dim(h, cumulative);
    if (schedule.path == PathKind::Diffusion) {
      if (sw != cw || sh != ch) {
        stages.push_back({Stage::Kind::Resample, k, sw, sh, {}, false});
      }
      for (const Pass& p : schedule.passes) {
        check_tiles(sw, sh, p, caps);
        stages.push_back({Stage::Kind::Refine, k, sw, sh, p, false});
      }
    } else {
      const Pass& p = schedule.passes.front();
      check_tiles(cw, ch, p, caps);
      const auto s = static_cast<std::size_t>(caps.scale_factor);
      stages.push_back({Stage::Kind::Refine, k, cw * s, ch * s, p, false});
      if (cw * s != sw || ch * s != sh) {
        stages.push_back({Stage::Kind::Resample, k, sw, sh, {}, false});
      }
    }
    cw = sw;
    ch = sh;
    if (last) break;
  }

  if (schedule.final_full_frame) {
    if (caps.scale_factor != 1) {
      if (notes) notes->push_back("final full-frame pass skipped: refiner scale is not 1");
    } else {
      const Pass& ref = schedule.passes.back();
      Pass fin;
      fin.name = "final";
      fin.denoise = kFallbackDenoise;
      fin.adapter_scale = ref.adapter_scale;
      fin.prompt = ref.prompt;
      fin.seed = ref.seed;
      fin.pad = 0;
      bool fallback = false;
      if (std::max(cw, ch) <= caps.max_tile_px) {
        fin.tile = std::max(cw, ch);
        fin.overlap = 0;
      } else {
        fin.tile = caps.max_tile_px;
        fin.overlap = std::min(kFallbackOverlap, caps.max_tile_px / 2);
        fallback = true;
        if (notes) {
          notes->push_back("final full-frame pass fell back to " + std::to_string(fin.tile) +
                           " px tiles: canvas " + std::to_string(cw) + "x" + std::to_string(ch) +
                           " exceeds max_tile_px " + std::to_string(caps.max_tile_px));
        }
      }
      stages.push_back({Stage::Kind::Refine, steps.size(), cw, ch, fin, fallback});
    }
  }
  return stages;
}

namespace {

class PremultiplyingReader final : public RowReader {
 public:
  explicit PremultiplyingReader(RowReader& inner) : inner_(inner), info_(inner.info()) {
    info_.alpha_mode = AlphaMode::Premultiplied;
  }
  const ImageInfo& info() const override { return info_; }
  void read_rows(ImageBuffer& dst, std::size_t dst_row, std::size_t count) override {
    inner_.read_rows(dst, dst_row, count);
    ImageBuffer rows = imaging::crop(dst, 0, dst_row, dst.width(), count);
    rows.set_alpha_mode(AlphaMode::Straight);
    dst.copy_rows_from(imaging::premultiply(rows), 0, dst_row, count);
  }

 private:
  RowReader& inner_;
  ImageInfo info_;
};

class UnpremultiplyingWriter final : public RowWriter {
 public:
  explicit UnpremultiplyingWriter(RowWriter& inner) : inner_(inner), info_(inner.info()) {
    info_.alpha_mode = AlphaMode::Premultiplied;
  }
  const ImageInfo& info() const override { return info_; }
  void write_rows(const ImageBuffer& src, std::size_t src_row, std::size_t count) override {
    ImageBuffer rows = imaging::crop(src, 0, src_row, src.width(), count);
    rows.set_alpha_mode(AlphaMode::Premultiplied);
    inner_.write_rows(imaging::unpremultiply(rows), 0, count);
  }
  void finish() override { inner_.finish(); }

 private:
  RowWriter& inner_;
  ImageInfo info_;
};

ImageInfo stage_output(const ImageInfo& in, const Stage& st) {
  ImageInfo out = in;
  out.width = st.out_w;
  out.height = st.out_h;
  return out;
}

void run_stage(const Stage& st, RowReader& reader, RowWriter& writer, refiner::Refiner& refiner,
               const RunOptions& options, PassReport& report) {
  if (st.kind == Stage::Kind::Refine) {
    run_pass_rows(reader, writer, st.pass, refiner, options, &report);
    report.step = st.step;
    report.fallback = st.fallback;
    return;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const ImageInfo in = reader.info();
  report.name = "resample";
  report.kind = "resample";
  report.step = st.step;
  report.in_w = in.width;
  report.in_h = in.height;
  report.out_w = st.out_w;
  report.out_h = st.out_h;
  report.footprint = resample_footprint(in, st.out_w, st.out_h, imaging::ResampleFilter::Lanczos3);
  if (in.layout == Layout::RGBA && in.alpha_mode == AlphaMode::Straight) {
    PremultiplyingReader pr(reader);
    UnpremultiplyingWriter pw(writer);
    resample_rows(pr, pw, imaging::ResampleFilter::Lanczos3, options.meter);
  } else {
    resample_rows(reader, writer, imaging::ResampleFilter::Lanczos3, options.meter);
  }
  const std::chrono::duration<double> secs = std::chrono::steady_clock::now() - t0;
  report.seconds = secs.count();
}

std::size_t stage_footprint(const ImageInfo& in, const Stage& st, std::size_t scale,
                            std::size_t parallelism) {
  if (st.kind == Stage::Kind::Resample) {
    return resample_footprint(in, st.out_w, st.out_h, imaging::ResampleFilter::Lanczos3);
  }
  return pass_footprint(in, st.pass, scale, parallelism);
}

}  // namespace

std::size_t minimum_budget(const ImageInfo& input, const std::vector<Stage>& stages,
                           std::size_t scale, std::size_t parallelism) {
  std::size_t need = 0;
  ImageInfo cur = input;
  for (const Stage& st : stages) {
    need = std::max(need, stage_footprint(cur, st, scale, parallelism));
    cur = stage_output(cur, st);
  }
  return need;
}

ImageBuffer run_schedule(const ImageBuffer& input, const PassSchedule& schedule,
                         refiner::Refiner& refiner, double target_scale,
                         const RunOptions& options, RunReport* report) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> notes = schedule.validate();
  const auto stages = resolve_stages(input.width(), input.height(), schedule,
                                     refiner.capabilities(), target_scale, &notes);
  ImageBuffer cur = input.alpha_mode() == AlphaMode::Premultiplied ? imaging::unpremultiply(input)
                                                                    : input;
  RunReport local;
  for (const Stage& st : stages) {
    BufferRowReader reader(cur);
    BufferRowWriter writer(stage_output(cur.info(), st));
    PassReport pr;
    run_stage(st, reader, writer, refiner, options, pr);
    local.passes.push_back(std::move(pr));
    local.fallback_engaged = local.fallback_engaged || st.fallback;
    cur = writer.take();
  }
  if (report) {
    local.warnings = std::move(notes);
    local.parallelism = options.parallelism;
    local.peak_memory = options.meter ? options.meter->peak() : 0;
    local.out_w = cur.width();
    local.out_h = cur.height();
    const std::chrono::duration<double> secs = std::chrono::steady_clock::now() - t0;
    local.seconds = secs.count();
    *report = std::move(local);
  }
  return cur;
}

RunReport stream_process(const std::filesystem::path& input_path,
                         const std::filesystem::path& output_path, const PassSchedule& schedule,
                         refiner::Refiner& refiner, double target_scale,
                         std::size_t memory_budget, const StreamOptions& options) {
  namespace fs = std::filesystem;
  const auto t0 = std::chrono::steady_clock::now();
  RunReport report;
  report.warnings = schedule.validate();
  const ImageInfo info = read_png_info(input_path);
  const auto& caps = refiner.capabilities();
  const auto stages = resolve_stages(info.width, info.height, schedule, caps, target_scale,
                                     &report.warnings);
  const auto scale = static_cast<std::size_t>(caps.scale_factor);

  std::size_t parallelism = std::max<std::size_t>(options.parallelism, 1);
  while (parallelism > 1 && minimum_budget(info, stages, scale, parallelism) > memory_budget) {
    --parallelism;
  }
  const std::size_t minimum = minimum_budget(info, stages, scale, parallelism);
  if (minimum > memory_budget) {
    throw Error(ErrorCode::BudgetTooSmall,
                "memory budget " + std::to_string(memory_budget) +
                    " bytes is too small; minimum feasible budget is " + std::to_string(minimum) +
                    " bytes");
  }
  if (parallelism < options.parallelism) {
    report.warnings.push_back("parallelism reduced to " + std::to_string(parallelism) +
                              " to fit the memory budget");
  }

  MemoryMeter meter;
  RunOptions run{parallelism, &meter};
  fs::path temp_dir = options.temp_dir;
  if (temp_dir.empty()) temp_dir = output_path.has_parent_path() ? output_path.parent_path() : ".";
  std::vector<fs::path> temps;
  auto cleanup = [&] {
    std::error_code ec;
    for (const auto& t : temps) fs::remove(t, ec);
  };
  try {
    fs::path cur = input_path;
    ImageInfo cur_info = info;
    if (stages.empty()) {
      PngRowReader reader(cur);
      PngRowWriter writer(output_path, cur_info, options.compression_level);
      ImageInfo row_info = cur_info;
      row_info.height = 1;
      auto lease = meter.lease(row_info.byte_size());
      ImageBuffer row(row_info);
      for (std::size_t y = 0; y < cur_info.height; ++y) {
        reader.read_rows(row, 0, 1);
        writer.write_rows(row, 0, 1);
      }
      writer.finish();
    }
    for (std::size_t i = 0; i < stages.size(); ++i) {
      const bool last = i + 1 == stages.size();
      fs::path next = last ? output_path
                           : temp_dir / (output_path.stem().string() + ".stage" + std::to_string(i) +
                                         ".tmp.png");
      if (!last) temps.push_back(next);
      const ImageInfo next_info = stage_output(cur_info, stages[i]);
      {
        PngRowReader reader(cur);
        PngRowWriter writer(next, next_info, options.compression_level);
        PassReport pr;
        run_stage(stages[i], reader, writer, refiner, run, pr);
        report.passes.push_back(std::move(pr));
      }
      report.fallback_engaged = report.fallback_engaged || stages[i].fallback;
      if (cur != input_path) {
        std::error_code ec;
        fs::remove(cur, ec);
      }
      cur = next;
      cur_info = next_info;
    }
    report.out_w = cur_info.width;
    report.out_h = cur_info.height;
  } catch (...) {
    cleanup();
    throw;
  }
  cleanup();
  report.parallelism = parallelism;
  report.memory_budget = memory_budget;
  report.peak_memory = meter.peak();
  const std::chrono::duration<double> secs = std::chrono::steady_clock::now() - t0;
  report.seconds = secs.count();
  return report;
}

nlohmann::json RunReport::to_json(bool include_timing) const {
  nlohmann::json passes_json = nlohmann::json::array();
  for (const auto& p : passes) {
    nlohmann::json j = {{"name", p.name},
                        {"kind", p.kind},
                        {"step", p.step},
                        {"input", {p.in_w, p.in_h}},
                        {"output", {p.out_w, p.out_h}},
                        {"footprint_bytes", p.footprint},
                        {"fallback", p.fallback}};
    if (p.kind == "refine") {
      j["tile"] = p.tile;
      j["overlap"] = p.overlap;
      j["pad"] = p.pad;
      j["tiles"] = p.tiles;
      j["denoise"] = p.denoise;
    }
    if (include_timing) {
      j["seconds"] = p.seconds;
      if (p.kind == "refine") {
        nlohmann::json lat = nlohmann::json::array();
        for (const auto& l : p.latencies) lat.push_back({{"tile", l.index}, {"ms", l.ms}});
        j["tile_latencies_ms"] = std::move(lat);
      }
    }
    passes_json.push_back(std::move(j));
  }
  nlohmann::json out = {{"passes", std::move(passes_json)},
                        {"warnings", warnings},
                        {"fallback_engaged", fallback_engaged},
                        {"peak_memory_bytes", peak_memory},
                        {"memory_budget_bytes", memory_budget},
                        {"parallelism", parallelism},
                        {"output", {out_w, out_h}}};
  if (include_timing) out["seconds"] = seconds;
  return out;
}

}  // namespace atelier::tiler
