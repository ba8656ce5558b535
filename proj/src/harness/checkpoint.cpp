#include "riskbandit/harness/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "riskbandit/common/errors.hpp"

namespace riskbandit::harness {

namespace {

constexpr const char* kMagic = "riskbandit-checkpoint";

std::string fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const nlohmann::json& payload) {
  const std::string body = payload.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << kMagic << ' ' << kCheckpointVersion << ' ' << fnv1a64(body) << '\n' << body;
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

nlohmann::json read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("cannot open checkpoint " + path.string());
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic;
  int version = 0;
  std::string checksum;
  if (!(hs >> magic >> version >> checksum) || magic != kMagic) {
    throw IntegrityError(path.string() + " is not a checkpoint file");
  }
  if (version != kCheckpointVersion) {
    throw IntegrityError("unsupported checkpoint version " + std::to_string(version));
  }
  std::ostringstream body;
  body << in.rdbuf();
  if (fnv1a64(body.str()) != checksum) {
    throw IntegrityError("checkpoint checksum mismatch in " + path.string());
  }
  try {
    return nlohmann::json::parse(body.str());
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("checkpoint payload does not parse: ") + e.what());
  }
}

}  // namespace riskbandit::harness
