#include <algorithm>
#include <chrono>
#include <future>
#include <mutex>
#include <string>

#include "atelier/imaging.hpp"
#include "atelier/tiler.hpp"

namespace atelier::tiler {

namespace {

constexpr std::size_t kFlushRows = 16;

/// F32 accumulator over output rows [y0, y0 + rows). Both stitch and the
/// band engine add tiles through add(), in tile-index order, so the per-pixel
/// sequence of float operations is the same on every path.
class Accumulator {
 public:
  Accumulator(std::size_t width, std::size_t channels, std::size_t rows)
      : width_(width), ch_(channels), rows_(rows), data_(width * channels * rows, 0.0f) {}

  static std::size_t bytes(std::size_t width, std::size_t channels, std::size_t rows) {
    return width * channels * rows * sizeof(float);
  }

  std::size_t y0() const { return y0_; }

  void add(const TileSpec& tile, const ImageBuffer& refined, const BlendField& field) {
    const std::size_t s = field.scale();
    const std::size_t cx = tile.core.x * s, cy = tile.core.y * s;
    const std::size_t cw = tile.core.w * s, ch = tile.core.h * s;
    const std::size_t ox = (tile.core.x - tile.padded.x) * s;
    const std::size_t oy = (tile.core.y - tile.padded.y) * s;
    const std::size_t ylo = std::max(cy, y0_), yhi = std::min(cy + ch, y0_ + rows_);
    auto px = field.profile_x(tile.col);
    auto py = field.profile_y(tile.row);
    const std::size_t src_row = refined.width() * ch_;
    refined.visit([&](auto src) {
      for (std::size_t y = ylo; y < yhi; ++y) {
        const double wy = py[y - cy];
        float* dst = row_ptr(y) + cx * ch_;
        const auto* row = src.data() + (y - cy + oy) * src_row + ox * ch_;
        for (std::size_t x = 0; x < cw; ++x) {
          const float w = static_cast<float>(px[x] * wy);
          for (std::size_t c = 0; c < ch_; ++c) {
            dst[x * ch_ + c] += w * static_cast<float>(row[x * ch_ + c]);
          }
        }
      }
    });
  }

  /// Writes rows [y0, until) to the writer and recycles their storage.
  void flush(std::size_t until, RowWriter& writer, ImageBuffer& chunk) {
    const std::size_t row = width_ * ch_;
    while (y0_ < until) {
      const std::size_t n = std::min(until - y0_, chunk.height());
      chunk.visit([&](auto dst) {
        using T = typename decltype(dst)::value_type;
        for (std::size_t k = 0; k < n; ++k) {
          float* src = row_ptr(y0_ + k);
          for (std::size_t i = 0; i < row; ++i) dst[k * row + i] = store_sample<T>(src[i]);
          std::fill(src, src + row, 0.0f);
        }
      });
      writer.write_rows(chunk, 0, n);
      y0_ += n;
    }
  }

  ImageBuffer to_image(const ImageInfo& info) const {
    ImageBuffer out(info);
    out.visit([&](auto dst) {
      using T = typename decltype(dst)::value_type;
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = store_sample<T>(data_[i]);
    });
    return out;
  }

 private:
  // Rows live in a ring indexed by y modulo the capacity.
  float* row_ptr(std::size_t y) { return data_.data() + (y % rows_) * width_ * ch_; }

  std::size_t width_, ch_, rows_;
  std::size_t y0_ = 0;
  std::vector<float> data_;
};

struct PassBuffers {
  std::size_t window = 0;    // padded input rows of one tile row
  std::size_t acc = 0;       // accumulator over one tile row of output
  std::size_t chunk = 0;     // flush staging rows
  std::size_t per_tile = 0;  // input crop plus refined output

  PassBuffers(const ImageInfo& in, const TilePlan& plan, std::size_t s) {
    ImageInfo win = in;
    win.height = plan.max_padded_h();
    window = win.byte_size();
    const std::size_t ch = in.channels();
    acc = Accumulator::bytes(in.width * s, ch, plan.core_h * s);
    const std::size_t px_bytes = ch * bytes_per_sample(in.depth);
    chunk = std::min(kFlushRows, in.height * s) * in.width * s * px_bytes;
    const std::size_t tile_px = plan.max_padded_w() * plan.max_padded_h();
    per_tile = tile_px * px_bytes * (1 + s * s);
  }
  std::size_t total(std::size_t parallelism) const {
    return window + acc + chunk + std::max<std::size_t>(parallelism, 1) * per_tile;
  }
};

ImageInfo scaled_info(const ImageInfo& in, std::size_t s) {
  ImageInfo out = in;
  out.width *= s;
  out.height *= s;
  return out;
}

std::string tile_label(const TileSpec& t) {
  return "tile (" + std::to_string(t.col) + "," + std::to_string(t.row) + ") #" +
         std::to_string(t.index);
}

void check_capability(const TilePlan& plan, const refiner::RefinerCapabilities& caps) {
  const std::size_t pw = plan.max_padded_w(), ph = plan.max_padded_h();
  if (pw > caps.max_tile_px || ph > caps.max_tile_px) {
    throw Error(ErrorCode::CapabilityExceeded,
                "padded tile " + std::to_string(pw) + "x" + std::to_string(ph) + " exceeds " +
                    caps.name + " max_tile_px " + std::to_string(caps.max_tile_px));
  }
}

}  // namespace

ImageBuffer stitch(std::span<const RefinedTile> tiles, const TilePlan& plan,
                   const BlendField& field) {
  std::vector<const RefinedTile*> by_index(plan.tiles.size(), nullptr);
  for (const auto& t : tiles) {
    if (t.tile.index >= by_index.size()) {
      throw Error(ErrorCode::DimensionMismatch, tile_label(t.tile) + " is not part of the plan");
    }
    by_index[t.tile.index] = &t;
  }
  const std::size_t s = field.scale();
  for (const auto& spec : plan.tiles) {
    const RefinedTile* t = by_index[spec.index];
    if (!t) throw Error(ErrorCode::MissingTile, "missing " + tile_label(spec));
    if (t->image.width() != spec.padded.w * s || t->image.height() != spec.padded.h * s) {
      throw Error(ErrorCode::DimensionMismatch,
                  tile_label(spec) + " is " + std::to_string(t->image.width()) + "x" +
                      std::to_string(t->image.height()) + ", expected " +
                      std::to_string(spec.padded.w * s) + "x" + std::to_string(spec.padded.h * s));
    }
  }
  const ImageBuffer& first = by_index.front()->image;
  for (const RefinedTile* t : by_index) {
    if (t->image.layout() != first.layout() || t->image.depth() != first.depth()) {
      throw Error(ErrorCode::LayoutMismatch, tile_label(t->tile) + " differs in layout or depth");
    }
  }
  ImageInfo out{plan.canvas_w * s, plan.canvas_h * s, first.layout(), first.depth(),
                first.alpha_mode()};
  Accumulator acc(out.width, out.channels(), out.height);
  for (const RefinedTile* t : by_index) acc.add(t->tile, t->image, field);
  return acc.to_image(out);
}

std::size_t pass_footprint(const ImageInfo& in, const Pass& pass, std::size_t scale,
                           std::size_t parallelism) {
  const TilePlan plan = plan_tiles(in.width, in.height, pass.tile, pass.overlap, pass.pad);
  return PassBuffers(in, plan, scale).total(parallelism);
}

PlanStats plan_stats(const ImageInfo& in, const Pass& pass, std::size_t scale,
                     std::size_t parallelism) {
  const TilePlan plan = plan_tiles(in.width, in.height, pass.tile, pass.overlap, pass.pad);
  PlanStats st;
  st.cols = plan.cols();
  st.rows = plan.rows();
  st.tiles = plan.tiles.size();
  st.padded_w = plan.max_padded_w();
  st.padded_h = plan.max_padded_h();
  st.footprint = PassBuffers(in, plan, scale).total(parallelism);
  return st;
}

void run_pass_rows(RowReader& reader, RowWriter& writer, const Pass& pass,
                   refiner::Refiner& refiner, const RunOptions& options, PassReport* report) {
  const auto started = std::chrono::steady_clock::now();
  const ImageInfo in = reader.info();
  const auto& caps = refiner.capabilities();
  const auto s = static_cast<std::size_t>(caps.scale_factor);
  const TilePlan plan = plan_tiles(in.width, in.height, pass.tile, pass.overlap, pass.pad);
  check_capability(plan, caps);
  const ImageInfo out = scaled_info(in, s);
  const ImageInfo& wi = writer.info();
  if (wi.width != out.width || wi.height != out.height || wi.layout != out.layout ||
      wi.depth != out.depth) {
    throw Error(ErrorCode::LayoutMismatch, "pass writer geometry does not match the refined canvas");
  }
  const BlendField field(plan, s);
  const std::size_t parallelism = caps.shareable ? std::max<std::size_t>(options.parallelism, 1) : 1;
  MemoryMeter* meter = options.meter;
  const PassBuffers sizes(in, plan, s);

  ImageInfo win_info = in;
  win_info.height = plan.max_padded_h();
  auto win_lease = meter_lease(meter, sizes.window);
  ImageBuffer window(win_info);
  std::size_t win_y0 = 0, win_rows = 0;

  auto acc_lease = meter_lease(meter, sizes.acc);
  Accumulator acc(out.width, out.channels(), plan.core_h * s);
  ImageInfo chunk_info = out;
  chunk_info.height = std::min(kFlushRows, out.height);
  auto chunk_lease = meter_lease(meter, sizes.chunk);
  ImageBuffer chunk(chunk_info);

  if (report) {
    report->name = pass.name;
    report->kind = "refine";
    report->in_w = in.width;
    report->in_h = in.height;
    report->out_w = out.width;
    report->out_h = out.height;
    report->tile = pass.tile;
    report->overlap = pass.overlap;
    report->pad = pass.pad;
    report->denoise = pass.denoise;
    report->tiles = plan.tiles.size();
    report->footprint = sizes.total(parallelism);
    report->latencies.clear();
  }

  struct Done {
    ImageBuffer image;
    double ms;
  };
  auto refine_one = [&](const TileSpec& t, std::size_t y_off) -> Done {
    const auto t0 = std::chrono::steady_clock::now();
    refiner::RefineRequest req;
    req.image = imaging::crop(window, t.padded.x, t.padded.y - y_off, t.padded.w, t.padded.h);
    req.denoise = pass.denoise;
    req.prompt = pass.prompt;
    req.adapter_scale = pass.adapter_scale;
    req.seed = pass.seed ^ static_cast<std::uint64_t>(t.index);
    req.pass_id = pass.name;
    try {
      ImageBuffer img = refiner::refine(refiner, req);
      const std::chrono::duration<double, std::milli> ms = std::chrono::steady_clock::now() - t0;
      return {std::move(img), ms.count()};
    } catch (const Error& e) {
      throw Error(e.code(), tile_label(t) + " of pass '" + pass.name + "': " + e.what());
    }
  };

  for (std::size_t r = 0; r < plan.rows(); ++r) {
    const TileSpec& lead = plan.at(0, r);
    acc.flush(lead.core.y * s, writer, chunk);

    const std::size_t py0 = lead.padded.y, py1 = lead.padded.bottom();
    if (py0 > win_y0) {
      const std::size_t drop = py0 - win_y0;
      if (drop < win_rows) {
        window.move_rows(drop, 0, win_rows - drop);
        win_rows -= drop;
      } else {
        for (std::size_t skip = drop - win_rows; skip > 0;) {
          const std::size_t n = std::min(skip, window.height());
          reader.read_rows(window, 0, n);
          skip -= n;
        }
        win_rows = 0;
      }
      win_y0 = py0;
    }
    if (win_y0 + win_rows < py1) {
      const std::size_t n = py1 - win_y0 - win_rows;
      reader.read_rows(window, win_rows, n);
      win_rows += n;
    }

    for (std::size_t c0 = 0; c0 < plan.cols(); c0 += parallelism) {
      const std::size_t c1 = std::min(plan.cols(), c0 + parallelism);
      std::vector<MemoryMeter::Lease> leases;
      std::vector<Done> done;
      if (c1 - c0 == 1) {
        leases.push_back(meter_lease(meter, sizes.per_tile));
        done.push_back(refine_one(plan.at(c0, r), win_y0));
      } else {
        std::vector<std::future<Done>> futures;
        for (std::size_t c = c0; c < c1; ++c) {
          leases.push_back(meter_lease(meter, sizes.per_tile));
          futures.push_back(std::async(std::launch::async, refine_one, std::cref(plan.at(c, r)), win_y0));
        }
        for (auto& f : futures) f.wait();
        for (auto& f : futures) done.push_back(f.get());
      }
      for (std::size_t c = c0; c < c1; ++c) {
        acc.add(plan.at(c, r), done[c - c0].image, field);
        if (report) report->latencies.push_back({plan.at(c, r).index, done[c - c0].ms});
      }
    }
  }
  acc.flush(out.height, writer, chunk);
  writer.finish();
  if (report) {
    const std::chrono::duration<double> secs = std::chrono::steady_clock::now() - started;
    report->seconds = secs.count();
  }
}

ImageBuffer run_pass(const ImageBuffer& canvas, const Pass& pass, refiner::Refiner& refiner,
                     const RunOptions& options, PassReport* report) {
  const auto s = static_cast<std::size_t>(refiner.capabilities().scale_factor);
  BufferRowReader reader(canvas);
  BufferRowWriter writer(scaled_info(canvas.info(), s));
  run_pass_rows(reader, writer, pass, refiner, options, report);
  return writer.take();
}

}  // namespace atelier::tiler
