#pragma once

#include <any>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "govdec/types.hpp"

namespace govdec::kernel {

inline constexpr std::uint64_t kInfinity = std::numeric_limits<std::uint64_t>::max();

/// Global safety cap on completed steps per instance, independent of any
/// workflow-level max_steps.
inline constexpr std::size_t kDefaultStepCap = 64;

enum class Phase : std::uint8_t { Idle, Active, AwaitingResult, Done };

std::string_view to_string(Phase p) noexcept;

/// An atomic component. Only an active component has a finite time advance
/// (always 0: time is logical, never wall-clock).
struct StepComponent {
  std::string step_id;
  std::optional<Primitive> primitive;
  Phase phase = Phase::Idle;
  std::uint64_t time_advance = kInfinity;
};

struct InjectedEvent {
  std::string target;
  std::any payload;
  std::uint64_t sequence = 0;
};

/// What the executor asks the kernel to do with the component it just ran.
struct Transition {
  enum class Kind : std::uint8_t { Await, Route, Suspend, Terminate };

  Kind kind = Kind::Await;
  /// Route target; empty means "follow the coupling of the source".
  std::string target;
  /// Set when this round completed a workflow step (counted in the report).
  std::optional<std::string> completed_step;
  /// Runs once the kernel has applied the transition; an awaiting component
  /// starts its asynchronous work here so the result cannot arrive early.
  std::function<void()> on_applied;

  static Transition await(std::function<void()> launch = {}) { return {Kind::Await, {}, {}, std::move(launch)}; }
  static Transition route(std::string target, std::optional<std::string> completed = {}) {
    return {Kind::Route, std::move(target), std::move(completed), {}};
  }
  static Transition suspend(std::optional<std::string> completed = {}) {
    return {Kind::Suspend, {}, std::move(completed), {}};
  }
  static Transition terminate(std::optional<std::string> completed = {}) {
    return {Kind::Terminate, {}, std::move(completed), {}};
  }
};

/// A coupled model: ordered components, a routing map, a logical clock and
/// a thread-safe injection queue drained by the (single-threaded) loop.
class WorkflowModel {
 public:
  WorkflowModel() = default;
  WorkflowModel(const WorkflowModel&) = delete;
  WorkflowModel& operator=(const WorkflowModel&) = delete;

  void add_component(std::string step_id, std::optional<Primitive> primitive = std::nullopt);
  void couple(const std::string& from, const std::string& to);

  /// Makes `step_id` the single component at time advance 0.
  void start(const std::string& step_id);

  /// Returns the unique component with minimal finite time advance, or
  /// nullopt (TERMINATED) when every component reports INFINITY. Throws
  /// MultipleActive when two components are at 0.
  std::optional<std::string> schedule() const;

  /// Thread-safe. Validates that the target exists and awaits a result,
  /// then queues the event. Without an explicit sequence the next one is
  /// assigned. Returns the event's sequence.
  std::uint64_t inject(const std::string& target, std::any payload,
                       std::optional<std::uint64_t> sequence = std::nullopt);

  /// Applies queued injections in ascending sequence order. Returns how many
  /// were consumed.
  std::size_t drain();

  /// Blocks until an injection is queued or the timeout passes.
  bool wait_for_injection(std::chrono::milliseconds timeout);

  const StepComponent& component(const std::string& step_id) const;
  std::vector<StepComponent> components() const;
  bool has_component(const std::string& step_id) const;

  /// Payload delivered by the injection that activated this component.
  std::optional<InjectedEvent> take_delivery(const std::string& step_id);

  void apply(const std::string& source, const Transition& t);

  bool pending_work_order() const;
  void set_pending_work_order(bool pending);
  bool any_awaiting() const;
  bool has_queued_injections() const;

  std::uint64_t clock() const;
  /// Sequences in the order they were consumed.
  std::vector<std::uint64_t> consumed_sequences() const;

  /// Puts a component directly into a phase; used when rebuilding a model
  /// from durable state.
  void restore_phase(const std::string& step_id, Phase phase);

 private:
  StepComponent& find(const std::string& step_id);
  const StepComponent& find(const std::string& step_id) const;
  void set_phase(StepComponent& c, Phase p);

  mutable std::mutex mutex_;
  std::condition_variable injected_;
  std::vector<StepComponent> components_;
  std::map<std::string, std::size_t> by_id_;
  std::map<std::string, std::string> couplings_;
  std::map<std::uint64_t, InjectedEvent> queue_;
  std::map<std::string, InjectedEvent> deliveries_;
  std::map<std::string, bool> pending_target_;
  std::vector<std::uint64_t> consumed_;
  std::uint64_t next_sequence_ = 1;
  std::uint64_t last_consumed_ = 0;
  std::uint64_t clock_ = 0;
  bool pending_work_order_ = false;
};

struct TerminalReport {
  enum class Status : std::uint8_t { Terminated, Suspended };
  Status status = Status::Terminated;
  std::vector<std::string> executed_steps;
  std::uint64_t rounds = 0;
};

using Executor = std::function<Transition(const StepComponent&, std::optional<InjectedEvent>)>;

/// Schedules, executes and drains injections until the model terminates or
/// suspends (all INFINITY with a pending work order). Throws
/// StepLimitExceeded past `step_cap` completed steps.
TerminalReport run_to_quiescence(WorkflowModel& model, const Executor& executor,
                                 std::size_t step_cap = kDefaultStepCap,
                                 std::chrono::milliseconds stall_timeout = std::chrono::minutes(5));

}  // namespace govdec::kernel
