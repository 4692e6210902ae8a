#include "splatop/protocol/hub.hpp"

#include "splatop/protocol/topics.hpp"

namespace splatop {

Hub::Hub() {
  for (const auto& t : topics::table())
    if (t.latched) latched_topics_.insert(std::string(t.name));
}

void Hub::set_latched(const std::string& topic, bool latched) {
  std::lock_guard lock(mu_);
  if (latched) {
    latched_topics_.insert(topic);
  } else {
    latched_topics_.erase(topic);
    latched_.erase(topic);
  }
}

bool Hub::is_latched(const std::string& topic) const {
  std::lock_guard lock(mu_);
  return latched_topics_.count(topic) > 0;
}

Hub::SubscriptionId Hub::subscribe(const std::string& topic, Callback cb) {
  std::lock_guard lock(mu_);
  const SubscriptionId id = next_id_++;
  if (auto it = latched_.find(topic); it != latched_.end())
    for (const Bytes& p : it->second) cb(topic, p);
  subs_.emplace(id, Sub{topic, std::move(cb)});
  return id;
}

void Hub::unsubscribe(SubscriptionId id) {
  std::lock_guard lock(mu_);
  subs_.erase(id);
}

void Hub::publish(const std::string& topic, const Bytes& payload, bool continue_group) {
  std::lock_guard lock(mu_);
  ++published_;
  if (latched_topics_.count(topic)) {
    auto& group = latched_[topic];
    if (!continue_group) group.clear();
    group.push_back(payload);
  }
  // Copy the matching callbacks so a callback may unsubscribe itself.
  std::vector<Callback> targets;
  for (const auto& [id, s] : subs_)
    if (s.topic == topic) targets.push_back(s.cb);
  for (const auto& cb : targets) cb(topic, payload);
}

std::uint64_t Hub::published() const {
  std::lock_guard lock(mu_);
  return published_;
}

}  // namespace splatop
