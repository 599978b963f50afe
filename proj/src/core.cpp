#include "mgsim/core.hpp"

#include <sstream>

namespace mgsim {

void LeaseConfig::validate() const {
  if (rd_lease < 1) throw ConfigError("lease.rd must be >= 1");
  if (wr_lease < 1) throw ConfigError("lease.wr must be >= 1");
  for (const auto& [addr, lease] : rd_override) {
    if (addr % kBlockBytes != 0) {
      std::ostringstream os;
      os << "lease override address 0x" << std::hex << addr << " is not block aligned";
      throw ConfigError(os.str());
    }
    if (lease < 1) throw ConfigError("lease override must be >= 1");
  }
}

const char* to_string(MsgKind k) {
  switch (k) {
    case MsgKind::ReadReq: return "ReadReq";
    case MsgKind::ReadResp: return "ReadResp";
    case MsgKind::WriteReq: return "WriteReq";
    case MsgKind::WriteResp: return "WriteResp";
    case MsgKind::EvictNotice: return "EvictNotice";
  }
  return "?";
}

const char* to_string(ServedBy s) {
  switch (s) {
    case ServedBy::L1: return "L1";
    case ServedBy::L2: return "L2";
    case ServedBy::Memory: return "MM";
  }
  return "?";
}

bool lease_contains(CacheTime cts, Timestamp wts, Timestamp rts) {
  if (rts < wts) {
    std::ostringstream os;
    os << "lease with rts " << rts << " < wts " << wts;
    throw ProtocolError(os.str());
  }
  return wts <= cts && cts <= rts;
}

TsAddResult ts_add(std::uint32_t ts, std::uint32_t delta) {
  if (delta < 1) throw ProtocolError("ts_add: delta must be >= 1");
  const std::uint64_t sum = static_cast<std::uint64_t>(ts) + delta;
  if (sum > kMaxTimestamp) return {0, true};
  return {static_cast<Timestamp>(sum), false};
}

}  // namespace mgsim
