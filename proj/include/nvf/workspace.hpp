#pragma once

#include <atomic>
#include <cstddef>
#include <new>
#include <vector>

namespace nvf {

// Process-wide counters for transient (batch- or frame-proportional)
// allocations. Parameter-shaped state (params, gradients, optimizer moments)
// is deliberately not routed through here.
class WorkspaceMeter {
 public:
  static void on_alloc(std::size_t bytes);
  static void on_free(std::size_t bytes);
  static std::size_t current();
  static std::size_t peak();
  static void reset_peak();
};

// Vectorised kernels pick their summation order from the data address, so
// numeric storage is cache-line aligned to keep results reproducible.
inline constexpr std::size_t kStorageAlignment = 64;

template <class T>
struct AlignedAllocator {
  using value_type = T;

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{kStorageAlignment}));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t{kStorageAlignment}); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

template <class T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

template <class T>
struct TrackedAllocator {
  using value_type = T;

  TrackedAllocator() = default;
  template <class U>
  TrackedAllocator(const TrackedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    WorkspaceMeter::on_alloc(n * sizeof(T));
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{kStorageAlignment}));
  }
  void deallocate(T* p, std::size_t n) noexcept {
    WorkspaceMeter::on_free(n * sizeof(T));
    ::operator delete(p, std::align_val_t{kStorageAlignment});
  }

  template <class U>
  bool operator==(const TrackedAllocator<U>&) const noexcept { return true; }
};

template <class T>
using Buffer = std::vector<T, TrackedAllocator<T>>;

// Measures the peak of tracked bytes above the level at construction.
class WorkspaceScope {
 public:
  WorkspaceScope() : baseline_(WorkspaceMeter::current()) { WorkspaceMeter::reset_peak(); }
  std::size_t peak_bytes() const {
    auto p = WorkspaceMeter::peak();
    return p > baseline_ ? p - baseline_ : 0;
  }

 private:
  std::size_t baseline_;
};

}  // namespace nvf
