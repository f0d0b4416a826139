#pragma once

#include <string>

#include "webnav/env.hpp"
#include "webnav/util.hpp"

namespace webnav::detail {

enum class Outcome { kNone, kSuccess, kFailure };

struct Instance {
  DomNode page;
  std::string utterance;
  Goal goal;
};

Instance build_instance(const std::string& task, Rng& rng);

// Applies `a` to the node at `path` of `page`, returning whether the episode
// was decided by it.
Outcome apply_action(const EnvState& s, DomNode& page, const NodePath& path, const Action& a);

}  // namespace webnav::detail
