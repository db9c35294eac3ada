from .agent import DqnAgent, TrainConfig, linear_epsilon
from .network import (AdamState, Batch, MlpParams, act_epsilon_greedy, adam_step, forward,
                      init_mlp, sync_target, td_loss, td_targets)
from .oracles import (OracleCapError, QTable, TableMDP, TabularConfig, finite_horizon_dp,
                      greedy_return, reachable_states, rollout_return, tabular_q_learning)
from .replay import ReplayBuffer
