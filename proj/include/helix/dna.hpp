#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace helix {

inline constexpr char kBases[4] = {'A', 'C', 'G', 'T'};

inline int base_index(char b) {
  switch (b) {
    case 'A': return 0;
    case 'C': return 1;
    case 'G': return 2;
    case 'T': return 3;
    default: return -1;
  }
}

inline bool is_dna(std::string_view s) {
  for (char c : s)
    if (base_index(c) < 0) return false;
  return true;
}

inline void require_dna(std::string_view s, const char* what) {
  if (!is_dna(s))
    throw std::invalid_argument(std::string(what) +
                                ": sequence contains a non-ACGT symbol");
}

}  // namespace helix
