#include "riskbandit/common/random.hpp"

#include <sstream>

#include "riskbandit/common/errors.hpp"

namespace riskbandit {

Rng make_stream(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return Rng(seq);
}

std::string describe_stream_rule() {
  return "mt19937_64 seeded with std::seed_seq{seed & 0xffffffff, seed >> 32, stream}; "
         "streams: env=1, noise=2, init=3, replay=4";
}

std::string save_rng(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void load_rng(Rng& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
  if (is.fail()) throw IntegrityError("corrupted RNG state");
}

}  // namespace riskbandit
