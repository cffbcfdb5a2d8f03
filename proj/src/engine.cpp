#include "govdec/engine.hpp"

#include <fstream>

#include "govdec/error.hpp"

namespace govdec {

namespace {

json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw StorageError("cannot read " + p.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw StorageError("corrupt manifest " + p.string() + ": " + e.what());
  }
}

void write_json_atomic(const std::filesystem::path& p, const json& j) {
  const auto tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write " + tmp);
    out << j.dump(2) << "\n";
    out.flush();
    if (!out) throw StorageError("short write on " + tmp);
  }
  std::filesystem::rename(tmp, p);
}

}  // namespace

json TraceEvent::to_json() const {
  return {{"event_type", event_type}, {"instance_id", instance_id}, {"sequence", sequence}, {"payload", payload}};
}

TraceEvent trace_event(const std::string& instance_id, const LedgerEntry& e) {
  TraceEvent ev;
  ev.instance_id = instance_id;
  ev.sequence = e.index + 1;
  ev.payload = e.content;
  ev.payload["hash"] = e.hash;
  if (e.entry_type == EntryType::System) {
    ev.event_type = e.content.value("event", std::string("system"));
  } else {
    ev.event_type = std::string(to_string(e.entry_type));
  }
  return ev;
}

bool closes_stream(const TraceEvent& ev) { return ev.event_type == "completed" || ev.event_type == "terminated"; }

Engine::Engine(EngineOptions options) : opts_(std::move(options)) {
  if (!opts_.backend) throw ContractError("engine needs a backend");
  std::error_code ec;
  std::filesystem::create_directories(opts_.data_dir / "instances", ec);
  if (ec) throw StorageError("cannot create data dir " + opts_.data_dir.string() + ": " + ec.message());
  store_ = std::make_unique<Store>((opts_.data_dir / "state.sqlite").string());
  if (opts_.kill_switches) {
    kill_switches_ = opts_.kill_switches;
  } else {
    own_switches_ = std::make_unique<KillSwitchBoard>();
    kill_switches_ = own_switches_.get();
  }
}

Engine::~Engine() { wait_all(); }

std::filesystem::path Engine::instance_dir(const std::string& instance_id) const {
  return opts_.data_dir / "instances" / instance_id;
}

std::string Engine::allocate_id(const std::string& case_id) {
  // Caller holds mu_.
  for (int n = 1;; ++n) {
    std::string id = case_id + "-" + std::to_string(n);
    if (!instances_.count(id) && !std::filesystem::exists(instance_dir(id))) return id;
  }
}

std::shared_ptr<Instance> Engine::open(const std::string& instance_id, const json& manifest) {
  const DomainConfig domain = load_domain(manifest.at("domain_path").get<std::string>());
  InstanceSpec spec;
  spec.instance_id = instance_id;
  spec.domain = domain;
  spec.workflow = load_workflow(manifest.at("workflow_path").get<std::string>());
  spec.case_input = parse_case(manifest.at("case"), &spec.domain);

  RuntimeOptions ro;
  if (opts_.clock_for) ro.ledger_clock = opts_.clock_for(instance_id);
  ro.now = opts_.now;
  ro.store = store_.get();
  ro.kill_switches = kill_switches_;
  ro.on_append = [this](const LedgerEntry&) {
    {
      std::lock_guard lock(feed_mu_);
      ++feed_version_;
    }
    feed_cv_.notify_all();
  };
  return std::make_shared<Instance>(std::move(spec), instance_dir(instance_id), *opts_.backend, opts_.policy,
                                    std::move(ro));
}

std::string Engine::start(const StartRequest& req, bool async) {
  // Validate before anything touches disk.
  const DomainConfig domain = load_domain(req.domain_path);
  load_workflow(req.workflow_path);
  const CaseInput c = parse_case(req.case_body, &domain);

  std::string id;
  std::shared_ptr<Instance> inst;
  {
    std::lock_guard lock(mu_);
    id = allocate_id(c.case_id);
    std::filesystem::create_directories(instance_dir(id));
    const json manifest = {{"instance_id", id},
                           {"case", req.case_body},
                           {"workflow_path", std::filesystem::absolute(req.workflow_path).string()},
                           {"domain_path", std::filesystem::absolute(req.domain_path).string()}};
    write_json_atomic(instance_dir(id) / "instance.json", manifest);
    inst = open(id, manifest);
    instances_[id] = inst;
  }
  launch(id, async);
  return id;
}

std::vector<std::string> Engine::recover_all(bool async) {
  std::vector<std::string> out;
  std::vector<std::string> dirs;
  for (const auto& e : std::filesystem::directory_iterator(opts_.data_dir / "instances")) {
    if (e.is_directory() && std::filesystem::exists(e.path() / "instance.json")) {
      dirs.push_back(e.path().filename().string());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& id : dirs) {
    {
      std::lock_guard lock(mu_);
      if (instances_.count(id)) continue;
      instances_[id] = open(id, read_json_file(instance_dir(id) / "instance.json"));
    }
    out.push_back(id);
    launch(id, async);
  }
  return out;
}

void Engine::launch(const std::string& instance_id, bool async) {
  std::shared_ptr<Instance> inst = get(instance_id);
  auto body = [this, inst, instance_id]() {
    try {
      inst->run();
    } catch (const std::exception& e) {
      std::lock_guard lock(mu_);
      errors_[instance_id] = e.what();
    }
    {
      std::lock_guard lock(feed_mu_);
      ++feed_version_;
    }
    feed_cv_.notify_all();
  };
  if (!async) {
    wait(instance_id);
    {
      std::lock_guard lock(mu_);
      errors_.erase(instance_id);
    }
    inst->run();
    return;
  }
  wait(instance_id);
  std::lock_guard lock(mu_);
  errors_.erase(instance_id);
  workers_[instance_id] = std::thread(body);
}

void Engine::wait(const std::string& instance_id) {
  std::thread t;
  {
    std::lock_guard lock(mu_);
    auto it = workers_.find(instance_id);
    if (it == workers_.end()) return;
    t = std::move(it->second);
    workers_.erase(it);
  }
  if (t.joinable()) t.join();
}

void Engine::wait_all() {
  for (const auto& id : ids()) wait(id);
}

std::shared_ptr<Instance> Engine::get(const std::string& instance_id) const {
  std::lock_guard lock(mu_);
  auto it = instances_.find(instance_id);
  if (it == instances_.end()) throw NotFound("unknown instance " + instance_id);
  return it->second;
}

std::vector<std::string> Engine::ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, _] : instances_) out.push_back(id);
  return out;
}

std::vector<json> Engine::list() const {
  std::vector<std::pair<std::string, std::shared_ptr<Instance>>> snapshot;
  std::map<std::string, std::string> errors;
  {
    std::lock_guard lock(mu_);
    snapshot.assign(instances_.begin(), instances_.end());
    errors = errors_;
  }
  std::vector<json> out;
  for (const auto& [id, inst] : snapshot) {
    json s = inst->summary();
    if (auto it = errors.find(id); it != errors.end()) s["error"] = it->second;
    out.push_back(std::move(s));
  }
  return out;
}

json Engine::review(const std::string& instance_id, const std::string& action, const Actor& actor, const json& body,
                    bool async) {
  auto inst = get(instance_id);
  const std::string note = body.value("note", std::string());
  std::optional<std::string> order_id;
  if (body.contains("order_id") && body["order_id"].is_string()) order_id = body["order_id"].get<std::string>();
  // Reviews wait for any in-flight run so they see settled state.
  wait(instance_id);
  if (action == "accept") {
    inst->accept(actor, order_id);
  } else if (action == "approve") {
    inst->approve(actor, note, order_id);
  } else if (action == "reject") {
    inst->reject(actor, note, body.value("resume_step", std::string()), order_id);
  } else if (action == "reassign") {
    inst->reassign(actor, order_id);
  } else if (action == "terminate") {
    inst->terminate_timed_out(actor, note, order_id);
  } else {
    throw NotFound("unknown review action '" + action + "'");
  }
  if (action == "approve" || action == "reject" || action == "terminate") launch(instance_id, async);
  return inst->summary();
}

void Engine::resume(const std::string& instance_id, bool async) { launch(instance_id, async); }

std::vector<std::string> Engine::sweep_sla(std::int64_t now) {
  std::vector<std::string> fired;
  for (const auto& id : ids()) {
    for (auto& o : get(id)->sweep_sla(now)) fired.push_back(std::move(o));
  }
  return fired;
}

std::vector<TraceEvent> Engine::events_after(const std::string& instance_id, std::uint64_t after_sequence,
                                             std::chrono::milliseconds timeout) {
  auto inst = get(instance_id);
  auto collect = [&]() {
    std::vector<TraceEvent> out;
    for (const auto& e : inst->ledger_entries()) {
      if (e.index + 1 > after_sequence) out.push_back(trace_event(instance_id, e));
    }
    return out;
  };
  std::unique_lock lock(feed_mu_);
  const std::uint64_t seen = feed_version_;
  lock.unlock();
  auto out = collect();
  if (!out.empty() || timeout.count() <= 0) return out;
  lock.lock();
  feed_cv_.wait_for(lock, timeout, [&] { return feed_version_ != seen; });
  lock.unlock();
  return collect();
}

}  // namespace govdec
