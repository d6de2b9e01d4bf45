#pragma once

// Data-parallel kernels behind clause evaluation and automaton updates.
// Each kernel has a portable scalar reference and, on x86-64, an AVX2
// variant. The active table is picked once at startup from CPUID and can be
// pinned with TMBOOT_SIMD=scalar|avx2.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace tmboot::simd {

struct KernelTable {
  std::string_view name;

  /// True iff (include & ~x) and (negate & x) are zero in every word.
  bool (*clause_fires)(const std::uint64_t* include, const std::uint64_t* negate,
                       const std::uint64_t* x, std::size_t words);

  /// True iff include is a subset of x.
  bool (*monotone_fires)(const std::uint64_t* include, const std::uint64_t* x,
                         std::size_t words);

  /// states[k] += up_k - down_k, saturating to [1, max_state]. `states`
  /// holds words * 64 entries.
  void (*step_states)(std::int16_t* states, const std::uint64_t* up,
                      const std::uint64_t* down, std::size_t words,
                      std::int16_t max_state);

  /// Bit k of out = states[k] > boundary, for words * 64 entries.
  void (*include_mask)(const std::int16_t* states, std::size_t words,
                       std::int16_t boundary, std::uint64_t* out);
};

const KernelTable& scalar_kernels();

/// nullptr when the AVX2 translation unit is not built or the CPU lacks AVX2.
const KernelTable* avx2_kernels();

/// The table all library code dispatches through.
const KernelTable& active();

/// Override the selection (tests use this to compare variants).
void set_active(const KernelTable& table);

}  // namespace tmboot::simd
