#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "splatop/protocol/frame.hpp"

namespace splatop {

/// In-process topic fan-out. Callbacks run synchronously on the publishing
/// thread, in publish order; publishes are serialized, so every subscriber
/// sees the same per-topic order. Latched topics replay their last message
/// group to new subscribers.
class Hub {
 public:
  using Callback = std::function<void(const std::string& topic, const Bytes& payload)>;
  using SubscriptionId = std::uint64_t;

  Hub();

  void set_latched(const std::string& topic, bool latched);
  bool is_latched(const std::string& topic) const;

  SubscriptionId subscribe(const std::string& topic, Callback cb);
  void unsubscribe(SubscriptionId id);

  /// `continue_group` appends to the latched group instead of replacing it
  /// (used for multi-chunk messages).
  void publish(const std::string& topic, const Bytes& payload, bool continue_group = false);

  std::uint64_t published() const;

 private:
  struct Sub {
    std::string topic;
    Callback cb;
  };
  mutable std::recursive_mutex mu_;
  std::map<SubscriptionId, Sub> subs_;
  std::set<std::string> latched_topics_;
  std::map<std::string, std::vector<Bytes>> latched_;
  SubscriptionId next_id_ = 1;
  std::uint64_t published_ = 0;
};

}  // namespace splatop
