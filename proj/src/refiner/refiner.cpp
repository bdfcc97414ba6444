#include "atelier/refiner.hpp"

#include <openssl/evp.h>

#include <string>

#include "atelier/codec.hpp"
#include "atelier/imaging.hpp"
#include "atelier/random.hpp"

namespace atelier::refiner {

ImageBuffer refine(Refiner& handle, const RefineRequest& req) {
  const RefinerCapabilities& caps = handle.capabilities();
  if (req.image.empty()) throw Error(ErrorCode::ZeroDimension, "empty tile");
  if (req.image.width() > caps.max_tile_px || req.image.height() > caps.max_tile_px) {
    throw Error(ErrorCode::CapabilityExceeded,
                std::to_string(req.image.width()) + "x" + std::to_string(req.image.height()) +
                    " tile exceeds " + caps.name + " max_tile_px " +
                    std::to_string(caps.max_tile_px));
  }
  if (!(req.denoise >= 0.0 && req.denoise <= 1.0)) {
    throw Error(ErrorCode::ValidationError, "denoise must lie in [0,1]");
  }
  if (!(req.adapter_scale >= 0.0)) {
    throw Error(ErrorCode::ValidationError, "adapter_scale must be >= 0");
  }
  ImageBuffer out = handle.refine_tile(req);
  const auto s = static_cast<std::size_t>(caps.scale_factor);
  if (out.width() != req.image.width() * s || out.height() != req.image.height() * s) {
    throw Error(ErrorCode::ProtocolError,
                caps.name + " returned " + std::to_string(out.width()) + "x" +
                    std::to_string(out.height()) + " for a " + std::to_string(req.image.width()) +
                    "x" + std::to_string(req.image.height()) + " tile at scale " +
                    std::to_string(caps.scale_factor));
  }
  if (out.layout() != req.image.layout() || out.depth() != req.image.depth()) {
    out = imaging::convert_depth(imaging::convert_layout(out, req.image.layout()), req.image.depth());
  }
  return out;
}

namespace {

class IdentityRefiner final : public Refiner {
 public:
  explicit IdentityRefiner(std::size_t max_tile) {
    caps_ = {"identity", 1, max_tile, false, true, true};
  }
  const RefinerCapabilities& capabilities() const override { return caps_; }

 protected:
  ImageBuffer refine_tile(const RefineRequest& req) override { return req.image; }

 private:
  RefinerCapabilities caps_;
};

class ClassicalRefiner final : public Refiner {
 public:
  ClassicalRefiner(int scale, std::size_t max_tile) {
    if (scale != 1 && scale != 2 && scale != 4) {
      throw Error(ErrorCode::ValidationError, "classical refiner scale must be 1, 2 or 4");
    }
    caps_ = {"classical-x" + std::to_string(scale), scale, max_tile, false, true, true};
  }
  const RefinerCapabilities& capabilities() const override { return caps_; }

 protected:
  ImageBuffer refine_tile(const RefineRequest& req) override {
    const auto s = static_cast<std::size_t>(caps_.scale_factor);
    ImageBuffer src = req.image;
    const bool rgba = src.layout() == Layout::RGBA;
    if (rgba) src = imaging::premultiply(src);
    ImageBuffer out = imaging::resample(src, src.width() * s, src.height() * s,
                                        imaging::ResampleFilter::Lanczos3);
    return rgba ? imaging::unpremultiply(out) : out;
  }

 private:
  RefinerCapabilities caps_;
};

class GrainRefiner final : public Refiner {
 public:
  explicit GrainRefiner(std::size_t max_tile) {
    caps_ = {"mock-grain", 1, max_tile, true, true, true};
  }
  const RefinerCapabilities& capabilities() const override { return caps_; }

 protected:
  ImageBuffer refine_tile(const RefineRequest& req) override {
    const double sigma = req.denoise * req.adapter_scale * 24.0 * max_value(req.image.depth()) / 255.0;
    if (sigma == 0.0) return req.image;
    Rng rng(req.seed);
    return imaging::map_color(req.image, [&](double v, std::size_t) { return v + sigma * rng.normal(); });
  }

 private:
  RefinerCapabilities caps_;
};

}  // namespace

RefinerHandle make_identity_refiner(std::size_t max_tile_px) {
  return std::make_shared<IdentityRefiner>(max_tile_px);
}

RefinerHandle make_classical_refiner(int scale, std::size_t max_tile_px) {
  return std::make_shared<ClassicalRefiner>(scale, max_tile_px);
}

RefinerHandle make_grain_refiner(std::size_t max_tile_px) {
  return std::make_shared<GrainRefiner>(max_tile_px);
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw Error(ErrorCode::ProtocolError, "base64 length not a multiple of 4");
  std::vector<std::uint8_t> out(3 * text.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw Error(ErrorCode::ProtocolError, "invalid base64 payload");
  std::size_t len = static_cast<std::size_t>(n);
  // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
  if (!text.empty() && text.back() == '=') --len;
  if (text.size() >= 2 && text[text.size() - 2] == '=') --len;
  out.resize(len);
  return out;
}

nlohmann::json to_json(const RefineRequest& req) {
  return {{"image", base64_encode(encode_png(req.image, 1))},
          {"denoise", req.denoise},
          {"prompt", req.prompt},
          {"adapter_scale", req.adapter_scale},
          {"seed", req.seed},
          {"pass_id", req.pass_id}};
}

RefineRequest request_from_json(const nlohmann::json& body) {
  try {
    RefineRequest req;
    req.image = decode_png(base64_decode(body.at("image").get<std::string>()));
    req.denoise = body.at("denoise").get<double>();
    req.prompt = body.at("prompt").get<std::string>();
    req.adapter_scale = body.at("adapter_scale").get<double>();
    req.seed = body.at("seed").get<std::uint64_t>();
    req.pass_id = body.at("pass_id").get<std::string>();
    return req;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ProtocolError, std::string("malformed refine request: ") + e.what());
  }
}

nlohmann::json to_json(const RefinerCapabilities& caps) {
  return {{"name", caps.name},
          {"scale_factor", caps.scale_factor},
          {"max_tile_px", caps.max_tile_px},
          {"accepts_prompt", caps.accepts_prompt},
          {"deterministic_for_seed", caps.deterministic_for_seed}};
}

RefinerCapabilities capabilities_from_json(const nlohmann::json& body) {
  try {
    RefinerCapabilities caps;
    caps.name = body.at("name").get<std::string>();
    caps.scale_factor = body.at("scale_factor").get<int>();
    caps.max_tile_px = body.at("max_tile_px").get<std::size_t>();
    caps.accepts_prompt = body.at("accepts_prompt").get<bool>();
    caps.deterministic_for_seed = body.at("deterministic_for_seed").get<bool>();
    if (body.contains("shareable")) caps.shareable = body.at("shareable").get<bool>();
    if (caps.scale_factor < 1) throw Error(ErrorCode::ProtocolError, "scale_factor must be >= 1");
    return caps;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ProtocolError, std::string("malformed info response: ") + e.what());
  }
}

}  // namespace atelier::refiner
