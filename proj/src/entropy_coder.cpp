#include "pcgc/entropy_coder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pcgc/error.hpp"

namespace pcgc {

namespace {

constexpr std::uint64_t kTop = 0xFFFFFFFFull;
constexpr std::uint64_t kHalf = 0x80000000ull;
constexpr std::uint64_t kQuarter = 0x40000000ull;
constexpr std::uint64_t kThreeQuarters = 0xC0000000ull;

void fill_cumulative(FreqTable& t) {
  t.cumulative[0] = 0;
  for (int j = 0; j < kNumSymbols; ++j) t.cumulative[j + 1] = t.cumulative[j] + t.counts[j];
}

void check_symbol(OccupancySymbol s) {
  if (s < 1) throw DataError("entropy coder: symbol 0 is outside the alphabet");
}

}  // namespace

double FreqTable::cost_bits(OccupancySymbol s) const {
  return -std::log2(static_cast<double>(count(s)) / static_cast<double>(kFreqTotal));
}

FreqTable quantize_dist(const ProbDist255& dist) {
  const double total = std::accumulate(dist.p.begin(), dist.p.end(), 0.0);
  if (!(std::abs(total - 1.0) <= 1e-6)) throw DataError("quantize_dist: probabilities must sum to 1");
  FreqTable t;
  std::array<double, kNumSymbols> remainder{};
  std::int64_t sum = 0;
  for (int j = 0; j < kNumSymbols; ++j) {
    const double ideal = dist.p[j] * static_cast<double>(kFreqTotal);
    if (!std::isfinite(ideal) || ideal < 0.0) throw DataError("quantize_dist: invalid probability");
    const auto c = std::max<std::int64_t>(1, std::llround(ideal));
    t.counts[j] = static_cast<std::uint32_t>(std::min<std::int64_t>(c, kFreqTotal));
    remainder[j] = ideal - static_cast<double>(t.counts[j]);
    sum += t.counts[j];
  }
  std::int64_t diff = static_cast<std::int64_t>(kFreqTotal) - sum;
  if (diff != 0) {
    std::array<int, kNumSymbols> order{};
    std::iota(order.begin(), order.end(), 0);
    if (diff > 0) {
      // largest remainder first
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return remainder[a] > remainder[b]; });
      for (std::size_t i = 0; diff > 0; i = (i + 1) % order.size(), --diff) ++t.counts[order[i]];
    } else {
      // smallest (most negative) remainder first, never below a count of 1
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return remainder[a] < remainder[b]; });
      while (diff < 0) {
        bool progressed = false;
        for (int idx : order) {
          if (diff == 0) break;
          if (t.counts[idx] > 1) {
            --t.counts[idx];
            ++diff;
            progressed = true;
          }
        }
        if (!progressed) throw DataError("quantize_dist: cannot reach the frequency total");
      }
    }
  }
  fill_cumulative(t);
  return t;
}

FreqTable uniform_table() {
  ProbDist255 d;
  d.p.fill(1.0 / kNumSymbols);
  return quantize_dist(d);
}

void ArithmeticEncoder::emit(bool bit) {
  const std::uint64_t pos = out_.bit_length++;
  if (pos % 8 == 0) out_.bytes.push_back(0);
  if (bit) out_.bytes.back() |= static_cast<std::uint8_t>(0x80u >> (pos % 8));
}

void ArithmeticEncoder::emit_with_pending(bool bit) {
  emit(bit);
  for (; pending_ > 0; --pending_) emit(!bit);
}

void ArithmeticEncoder::encode(OccupancySymbol symbol, const FreqTable& table) {
  if (finished_) throw DataError("ArithmeticEncoder: encode after finish");
  check_symbol(symbol);
  const std::uint64_t range = high_ - low_ + 1;
  const std::uint64_t lo = table.cumulative[symbol - 1u];
  const std::uint64_t hi = table.cumulative[symbol];
  high_ = low_ + range * hi / kFreqTotal - 1;
  low_ = low_ + range * lo / kFreqTotal;
  while (true) {
    if (high_ < kHalf) {
      emit_with_pending(false);
    } else if (low_ >= kHalf) {
      emit_with_pending(true);
      low_ -= kHalf;
      high_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
      ++pending_;
      low_ -= kQuarter;
      high_ -= kQuarter;
    } else {
      break;
    }
    low_ <<= 1;
    high_ = (high_ << 1) | 1u;
  }
  if (low_ > high_ || high_ > kTop || high_ - low_ < kQuarter) {
    throw VerificationError("ArithmeticEncoder: register invariant violated");
  }
}

Bitstream ArithmeticEncoder::finish() {
  if (finished_) throw DataError("ArithmeticEncoder: finish called twice");
  finished_ = true;
  ++pending_;
  emit_with_pending(low_ >= kQuarter);
  return std::move(out_);
}

ArithmeticDecoder::ArithmeticDecoder(const Bitstream& bits) : bits_(bits) {
  if (bits.bytes.size() < (bits.bit_length + 7) / 8) throw DataError("bitstream truncated");
  for (int i = 0; i < 32; ++i) value_ = (value_ << 1) | (next_bit() ? 1u : 0u);
}

bool ArithmeticDecoder::next_bit() {
  const std::uint64_t pos = read_pos_++;
  // Past the end the stream reads as zeros; the flush guarantees that any
  // continuation stays inside the final interval.
  if (pos >= bits_.bit_length) {
    if (pos >= bits_.bit_length + 32) throw VerificationError("bitstream exhausted before decoding finished");
    return false;
  }
  return (bits_.bytes[pos / 8] >> (7 - pos % 8)) & 1u;
}

OccupancySymbol ArithmeticDecoder::decode(const FreqTable& table) {
  const std::uint64_t range = high_ - low_ + 1;
  const std::uint64_t scaled = ((value_ - low_ + 1) * kFreqTotal - 1) / range;
  // first cumulative entry strictly greater than `scaled`
  const auto it = std::upper_bound(table.cumulative.begin() + 1, table.cumulative.end(), scaled);
  if (it == table.cumulative.end()) throw VerificationError("ArithmeticDecoder: value outside the coding interval");
  const auto symbol = static_cast<OccupancySymbol>(it - table.cumulative.begin());
  const std::uint64_t lo = table.cumulative[symbol - 1u];
  const std::uint64_t hi = table.cumulative[symbol];
  high_ = low_ + range * hi / kFreqTotal - 1;
  low_ = low_ + range * lo / kFreqTotal;
  while (true) {
    if (high_ < kHalf) {
      // nothing to subtract
    } else if (low_ >= kHalf) {
      value_ -= kHalf;
      low_ -= kHalf;
      high_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
      value_ -= kQuarter;
      low_ -= kQuarter;
      high_ -= kQuarter;
    } else {
      break;
    }
    low_ <<= 1;
    high_ = (high_ << 1) | 1u;
    value_ = (value_ << 1) | (next_bit() ? 1u : 0u);
    ++shifts_;
  }
  return symbol;
}

void ArithmeticDecoder::finish() const {
  if (shifts_ + 2 != bits_.bit_length) {
    throw VerificationError("payload length mismatch: decoder consumed " + std::to_string(shifts_ + 2) +
                            " bits, stream holds " + std::to_string(bits_.bit_length));
  }
}

Bitstream encode_symbols(std::span<const OccupancySymbol> symbols, std::span<const FreqTable> tables) {
  if (symbols.size() != tables.size()) throw DataError("encode_symbols: one table per symbol required");
  ArithmeticEncoder enc;
  for (std::size_t i = 0; i < symbols.size(); ++i) enc.encode(symbols[i], tables[i]);
  return enc.finish();
}

std::vector<OccupancySymbol> decode_symbols(const Bitstream& bits,
                                            const std::function<FreqTable(std::size_t)>& next_table,
                                            std::size_t count) {
  ArithmeticDecoder dec(bits);
  std::vector<OccupancySymbol> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(dec.decode(next_table(i)));
  dec.finish();
  return out;
}

double ideal_bits(std::span<const OccupancySymbol> symbols, std::span<const FreqTable> tables) {
  if (symbols.size() != tables.size()) throw DataError("ideal_bits: one table per symbol required");
  double total = 0.0;
  for (std::size_t i = 0; i < symbols.size(); ++i) total += tables[i].cost_bits(symbols[i]);
  return total;
}

}  // namespace pcgc
