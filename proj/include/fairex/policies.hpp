#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "fairex/netsim.hpp"

namespace fairex {

// Named adversary policies, constructed fresh per run.
//
//   eager          deliver every flight promptly, oldest first
//   random         weighted schedule shuffle: deliver / drop / replay / stall
//   drop_rate      eager, but each flight is dropped with probability p=<p>
//   drop_all       nothing is ever delivered
//   drop_tag       drop every flight carrying tag=<name>, deliver the rest
//   replay_happy   eager, then every delivered flight is replayed once
//   front_runner   races a pending contract close with an injected copy
//                  from thief=<id> (default "mallory"), then delivers the
//                  original
//   spoof_open     withholds the real contract from the chain and feeds
//                  both parties forged tape broadcasts instead

using PolicyFactory = std::function<std::unique_ptr<AdversaryPolicy>(
    const std::map<std::string, std::string>& params)>;

// Throws std::invalid_argument for an unknown name or bad params.
std::unique_ptr<AdversaryPolicy> make_policy(
    const std::string& name, const std::map<std::string, std::string>& params = {});

void register_policy(const std::string& name, PolicyFactory factory);

std::vector<std::string> policy_names();

// Replays a fixed action list, then stalls. Not in the registry: scripts
// are data, not names.
std::unique_ptr<AdversaryPolicy> make_scripted_policy(std::vector<Action> script);

} // namespace fairex
