#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "probation/kernels.hpp"

namespace probation::kernels {
namespace {

const KernelTable* initial_table() {
  if (const char* env = std::getenv("PROBATION_ISA")) {
    if (parse_isa(env) == Isa::Scalar) return &scalar_table();
  }
  if (const KernelTable* t = avx2_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

void set_active_isa(Isa isa) {
  if (isa == Isa::Scalar) {
    slot().store(&scalar_table(), std::memory_order_release);
    return;
  }
  const KernelTable* t = avx2_table();
  if (t == nullptr) throw std::runtime_error("AVX2 kernels are not available on this CPU");
  slot().store(t, std::memory_order_release);
}

std::string_view isa_name(Isa isa) { return isa == Isa::Scalar ? "scalar" : "avx2"; }

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::Scalar;
  if (name == "avx2") return Isa::Avx2;
  throw std::invalid_argument("unknown ISA '" + std::string(name) + "' (expected scalar|avx2)");
}

}  // namespace probation::kernels
