#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dynaweight/dataset.hpp"
#include "dynaweight/graph.hpp"
#include "dynaweight/metrics.hpp"
#include "dynaweight/model.hpp"
#include "dynaweight/weighting.hpp"

namespace dynaweight {

enum class Scheme { Simple, Metropolis, Dynaweight, FedAvg, Centralized };

Scheme scheme_from_string(const std::string& name);
std::string to_string(Scheme scheme);

struct ServerState;

struct RoundConfig {
  int epochs = 1;           // K
  int consensus_steps = 1;  // C
  int batch_size = 16;
  Scheme scheme = Scheme::Dynaweight;
  std::uint64_t seed = 0;
  OptimizerState optimizer;  // template, copied per server
  bool track_weights = true;

  // Diagnostic override: run the adaptive scheme with these fixed
  // centralities instead of the evaluation phase.
  std::optional<std::vector<double>> frozen_centralities;

  // Invoked after each epoch's aggregation with the 1-based epoch index;
  // the experiment layer hangs checkpointing off this.
  std::function<void(int, const std::vector<ServerState>&)> on_epoch;
};

/// Per-server state. ghost is a scratch slot for evaluating a neighbor's
/// parameters on local data; it is overwritten every evaluation phase and
/// never read across rounds.
struct ServerState {
  int id = 0;
  ParamVector params;
  const Dataset* shard = nullptr;
  OptimizerState opt;
  ParamVector ghost;
};

/// Simulated message fabric. Delivery is restricted to graph edges, at most
/// one message of each kind per edge per phase, and inboxes are ordered by
/// sender id, so execution is deterministic for any worker count.
class Mailbox {
 public:
  explicit Mailbox(const Graph& g);

  void send_params(int from, int to, const ParamVector& values);
  void send_loss(int from, int to, double value);
  void send_centrality(int from, int to, double value);

  struct ParamsMsg {
    int from;
    ParamVector values;
  };
  struct ScalarMsg {
    int from;
    double value;
  };

  const std::vector<ParamsMsg>& params_inbox(int node) const { return params_in_.at(node); }
  const std::vector<ScalarMsg>& loss_inbox(int node) const { return losses_in_.at(node); }
  const std::vector<ScalarMsg>& centrality_inbox(int node) const {
    return centralities_in_.at(node);
  }

  void clear();  // empties inboxes and per-phase duplicate tracking

  std::size_t params_sent() const { return params_sent_; }
  std::size_t losses_sent() const { return losses_sent_; }
  std::size_t centralities_sent() const { return centralities_sent_; }
  void reset_counters();

 private:
  void check_edge(int from, int to, const char* kind) const;
  void check_duplicate(std::vector<bool>& sent, int from, int to, const char* kind);

  const Graph* graph_;
  std::vector<std::vector<ParamsMsg>> params_in_;
  std::vector<std::vector<ScalarMsg>> losses_in_;
  std::vector<std::vector<ScalarMsg>> centralities_in_;
  std::vector<bool> params_edge_used_, losses_edge_used_, centralities_edge_used_;
  std::size_t params_sent_ = 0, losses_sent_ = 0, centralities_sent_ = 0;
};

// One optimizer pass over a seeded shuffle of the server's shard; the
// shuffle seed is derived from (run seed, server id, epoch).
void local_epoch(ServerState& server, const ModelSpec& spec, int epoch, int batch_size,
                 std::uint64_t run_seed);

// Every server broadcasts its parameters to its neighbors.
void readout_phase(const std::vector<ServerState>& servers, const Graph& g, Mailbox& mailbox);

// Each server evaluates the received neighbor models on its own shard via
// its ghost slot, returns the scalar losses to their owners, computes its
// centrality, and broadcasts it. Requires a completed readout.
LossTable evaluation_phase(std::vector<ServerState>& servers, const Graph& g,
                           const ModelSpec& spec, Mailbox& mailbox);

// C synchronous mixing rounds over the closed neighborhood; every round
// consumes the previous round's values, equivalent to applying w^C.
void gossip_phase(std::vector<ServerState>& servers, const Graph& g, const WeightMatrix& w,
                  int consensus_steps);

// Full training loop for the gossip-based schemes (simple | metropolis |
// dynaweight). Static schemes compute the mixing matrix once; the adaptive
// scheme runs readout + evaluation every epoch.
std::vector<RoundLog> run_decentralized(const RoundConfig& cfg, const Graph& g,
                                        const Partition& partition, const Dataset& test_set,
                                        const ModelSpec& spec);

// Central aggregation baseline: local epochs, then everyone receives the
// across-server mean.
std::vector<RoundLog> run_fedavg(const RoundConfig& cfg, const Partition& partition,
                                 const Dataset& test_set, const ModelSpec& spec);

// Single-model baseline trained on the full dataset with the same
// optimizer, schedules and seeding as server 0.
std::vector<RoundLog> run_centralized(const RoundConfig& cfg, const Dataset& train,
                                      const Dataset& test_set, const ModelSpec& spec);

}  // namespace dynaweight
