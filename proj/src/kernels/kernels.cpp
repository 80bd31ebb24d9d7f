#include "rilo/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace rilo::kernels {

namespace {

const Kernels* table_for(Backend b) {
  switch (b) {
    case Backend::Scalar: return &scalar();
    case Backend::Avx2: return avx2();
  }
  return nullptr;
}

Backend pick_default() {
  if (const char* env = std::getenv("RILO_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return Backend::Scalar;
    if (want == "avx2") {
      if (!avx2()) throw std::runtime_error("RILO_KERNELS=avx2 but AVX2 kernels are unavailable on this CPU");
      return Backend::Avx2;
    }
    throw std::runtime_error("unknown RILO_KERNELS value: " + want + " (expected scalar or avx2)");
  }
  return avx2() ? Backend::Avx2 : Backend::Scalar;
}

// The active backend is process-wide state; tests flip it via set_backend to
// compare implementations, everything else just reads it once per call site.
Backend g_backend = pick_default();

}  // namespace

const Kernels& active() { return *table_for(g_backend); }

Backend active_backend() { return g_backend; }

void set_backend(Backend b) {
  if (!table_for(b)) throw std::runtime_error("requested kernel backend is unavailable on this CPU");
  g_backend = b;
}

std::string active_name() {
  switch (g_backend) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
  }
  return "?";
}

}  // namespace rilo::kernels
