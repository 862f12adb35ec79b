#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pcgc/context_model.hpp"
#include "pcgc/octree.hpp"

namespace pcgc {

constexpr std::uint32_t kFreqBits = 16;
constexpr std::uint32_t kFreqTotal = 1u << kFreqBits;

// Integer distribution over symbols 1..255 with every count >= 1 and
// counts summing to 2^16. cumulative[j-1] .. cumulative[j] is symbol j's
// interval.
struct FreqTable {
  std::array<std::uint32_t, kNumSymbols> counts{};
  std::array<std::uint32_t, kNumSymbols + 1> cumulative{};

  std::uint32_t count(OccupancySymbol s) const { return counts[s - 1u]; }
  // -log2(count / total)
  double cost_bits(OccupancySymbol s) const;

  bool operator==(const FreqTable&) const = default;
};

// round(p * 2^16) floored at 1, then largest-remainder correction to an
// exact 2^16 total; ties go to the lower symbol.
FreqTable quantize_dist(const ProbDist255& dist);
FreqTable uniform_table();

// MSB-first bytes; bit_length counts the bits actually emitted.
struct Bitstream {
  std::vector<std::uint8_t> bytes;
  std::uint64_t bit_length = 0;

  bool operator==(const Bitstream&) const = default;
};

// 32-bit binary arithmetic coder with deferred (follow-on) bits for
// straddling intervals, flushed with two disambiguating bits.
class ArithmeticEncoder {
 public:
  void encode(OccupancySymbol symbol, const FreqTable& table);
  Bitstream finish();

 private:
  void emit(bool bit);
  void emit_with_pending(bool bit);

  std::uint64_t low_ = 0;
  std::uint64_t high_ = 0xFFFFFFFFull;
  std::uint64_t pending_ = 0;
  Bitstream out_;
  bool finished_ = false;
};

class ArithmeticDecoder {
 public:
  explicit ArithmeticDecoder(const Bitstream& bits);

  OccupancySymbol decode(const FreqTable& table);
  // Renormalization shifts performed so far. After the last symbol of a
  // well-formed stream this equals bit_length - 2.
  std::uint64_t shifts() const { return shifts_; }
  // Throws VerificationError unless the decoder consumed exactly the bits
  // the encoder emitted.
  void finish() const;

 private:
  bool next_bit();

  const Bitstream& bits_;
  std::uint64_t low_ = 0;
  std::uint64_t high_ = 0xFFFFFFFFull;
  std::uint64_t value_ = 0;
  std::uint64_t read_pos_ = 0;
  std::uint64_t shifts_ = 0;
};

Bitstream encode_symbols(std::span<const OccupancySymbol> symbols, std::span<const FreqTable> tables);
std::vector<OccupancySymbol> decode_symbols(const Bitstream& bits,
                                            const std::function<FreqTable(std::size_t)>& next_table,
                                            std::size_t count);

// Sum of -log2(q(s)) under the given tables.
double ideal_bits(std::span<const OccupancySymbol> symbols, std::span<const FreqTable> tables);

}  // namespace pcgc
