#pragma once

#include <atomic>
#include <cstddef>

namespace atelier {

/// Accounts resident pixel storage for the streaming engine. Buffers take a
/// Lease for their byte size; the meter tracks the current and peak totals.
class MemoryMeter {
 public:
  class Lease {
   public:
    Lease() = default;
    Lease(MemoryMeter* meter, std::size_t bytes) : meter_(meter), bytes_(bytes) {
      if (meter_) meter_->acquire(bytes_);
    }
    Lease(const Lease&) = delete;
    Lease& operator=(const Lease&) = delete;
    Lease(Lease&& other) noexcept : meter_(other.meter_), bytes_(other.bytes_) {
      other.meter_ = nullptr;
      other.bytes_ = 0;
    }
    Lease& operator=(Lease&& other) noexcept {
      if (this != &other) {
        reset();
        meter_ = other.meter_;
        bytes_ = other.bytes_;
        other.meter_ = nullptr;
        other.bytes_ = 0;
      }
      return *this;
    }
    ~Lease() { reset(); }

    void reset() {
      if (meter_) meter_->release(bytes_);
      meter_ = nullptr;
      bytes_ = 0;
    }
    std::size_t bytes() const { return bytes_; }

   private:
    MemoryMeter* meter_ = nullptr;
    std::size_t bytes_ = 0;
  };

  Lease lease(std::size_t bytes) { return Lease(this, bytes); }

  std::size_t current() const { return current_.load(); }
  std::size_t peak() const { return peak_.load(); }

 private:
  void acquire(std::size_t bytes) {
    const std::size_t now = current_.fetch_add(bytes) + bytes;
    std::size_t prev = peak_.load();
    while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
    }
  }
  void release(std::size_t bytes) { current_.fetch_sub(bytes); }

  std::atomic<std::size_t> current_{0};
  std::atomic<std::size_t> peak_{0};
};

/// Lease against an optional meter; a null meter yields an inert lease.
inline MemoryMeter::Lease meter_lease(MemoryMeter* meter, std::size_t bytes) {
  return MemoryMeter::Lease(meter, bytes);
}

}  // namespace atelier
