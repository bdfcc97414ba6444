#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "atelier/image.hpp"

namespace atelier::refiner {

struct RefinerCapabilities {
  std::string name;
  int scale_factor = 1;
  std::size_t max_tile_px = 4096;
  bool accepts_prompt = false;
  bool deterministic_for_seed = true;
  /// Extension: false asks the engine to serialize calls on this handle.
  bool shareable = true;
};

struct RefineRequest {
  ImageBuffer image;
  double denoise = 0.0;
  std::string prompt;
  double adapter_scale = 1.0;
  std::uint64_t seed = 0;
  std::string pass_id;
};

/// A tile refiner. Implementations only see requests that already passed
/// the capability checks in refine().
class Refiner {
 public:
  virtual ~Refiner() = default;
  virtual const RefinerCapabilities& capabilities() const = 0;

 protected:
  friend ImageBuffer refine(Refiner& handle, const RefineRequest& req);
  virtual ImageBuffer refine_tile(const RefineRequest& req) = 0;
};

using RefinerHandle = std::shared_ptr<Refiner>;

/// Checks the request against the handle's capabilities, runs it, and
/// verifies the output geometry. Errors: CapabilityExceeded,
/// ValidationError (denoise or adapter scale out of range), ProtocolError
/// (wrong output dims), plus whatever the handle raises.
ImageBuffer refine(Refiner& handle, const RefineRequest& req);

inline const RefinerCapabilities& capabilities(const Refiner& handle) {
  return handle.capabilities();
}

inline constexpr std::size_t kDefaultMaxTile = 4096;

/// Returns the decoded input unchanged.
RefinerHandle make_identity_refiner(std::size_t max_tile_px = kDefaultMaxTile);

/// Lanczos3 resample by `scale` (1, 2 or 4).
RefinerHandle make_classical_refiner(int scale, std::size_t max_tile_px = kDefaultMaxTile);

/// Deterministic stand-in for a texture model: adds seeded Gaussian grain
/// to color samples with sigma = denoise * adapter_scale * 24 LSB. Zero
/// denoise returns the input.
RefinerHandle make_grain_refiner(std::size_t max_tile_px = kDefaultMaxTile);

// Wire format helpers (JSON field names are part of the protocol).

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

nlohmann::json to_json(const RefineRequest& req);
RefineRequest request_from_json(const nlohmann::json& body);
nlohmann::json to_json(const RefinerCapabilities& caps);
RefinerCapabilities capabilities_from_json(const nlohmann::json& body);

struct HttpOptions {
  std::chrono::milliseconds timeout{300'000};
  std::chrono::milliseconds connect_timeout{10'000};
  int retries = 2;
  std::chrono::milliseconds backoff{500};
  std::size_t pool_size = 4;
};

/// Client for an external refiner service. Probes GET /v1/info on
/// construction (TransportError if unreachable).
RefinerHandle make_http_refiner(const std::string& endpoint, HttpOptions options = {});

}  // namespace atelier::refiner
