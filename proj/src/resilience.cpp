#include "trellis/resilience.hpp"

#include <fstream>
#include <sstream>

namespace trellis {

const WalkerCheckpoint& CheckpointStore::append(WalkerId walker, Value payload,
                                                std::uint64_t event, std::uint64_t step_index) {
    auto& vec = records_[walker];
    WalkerCheckpoint cp;
    cp.walker = walker;
    cp.sequence = vec.empty() ? 0 : vec.back().sequence + 1;
    cp.payload = std::move(payload);
    cp.taken_at_event = event;
    cp.step_index = step_index;
    vec.push_back(std::move(cp));
    if (!path_.empty()) {
        std::ofstream out(path_, std::ios::binary | std::ios::app);
        if (!out) raise(Errc::IoFailure, "cannot append checkpoint to " + path_);
        const WalkerCheckpoint& rec = vec.back();
        out << Value{{"walker", rec.walker.value},
                     {"sequence", rec.sequence},
                     {"taken_at_event", rec.taken_at_event},
                     {"step_index", rec.step_index},
                     {"payload", rec.payload}}
                   .dump()
            << "\n";
    }
    return vec.back();
}

std::vector<FaultAction> parse_fault_plan(const Value& doc) {
    if (!doc.is_array()) raise(Errc::BadConfig, "fault plan must be a list");
    std::vector<FaultAction> plan;
    for (const auto& entry : doc) {
        FaultAction a;
        a.event_index = entry.at("event_index").get<std::uint64_t>();
        const std::string kind = entry.at("action").get<std::string>();
        if (kind == "kill") a.kind = FaultKind::Kill;
        else if (kind == "revive") a.kind = FaultKind::Revive;
        else raise(Errc::BadConfig, "unknown fault action " + kind);
        a.machine = MachineId{entry.at("machine").get<std::uint64_t>()};
        plan.push_back(a);
    }
    return plan;
}

std::vector<FaultAction> load_fault_plan(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::IoFailure, "cannot open fault plan " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    Value doc = Value::parse(buf.str(), nullptr, false);
    if (doc.is_discarded()) raise(Errc::BadConfig, "unparseable fault plan " + path);
    return parse_fault_plan(doc);
}

}  // namespace trellis
