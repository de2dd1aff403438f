"""Assembles a world from a SimConfig and executes independent runs.

Run i is seeded with ``config.seed + i`` and owns all of its state, so runs
can execute in parallel worker processes; reports always come back ordered
by run index.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor

from .config import SimConfig, parse_sampler
from .consensus import ConsensusEngine, ConsensusParams, Selector, main_chain
from .engine import EventKind, EventQueue, RandomSource, run_loop
from .incentives import RewardParams, distribute
from .model import World
from .network import DelayMode, DelayModel, Network
from .stats import RunReport, summarize_run
from .workload import TxWorkload, WorkloadParams


class Simulation:
    """One fully wired run: world, queue, network, workload, and consensus."""

    def __init__(self, config: SimConfig, run_index: int = 0) -> None:
        self.config = config
        self.run_index = run_index
        self.seed = config.seed + run_index
        self.rng = RandomSource(self.seed)

        stakes = config.stakes if config.stakes is not None else config.miners
        self.world = World(config.n_n, hash_powers=config.miners, stakes=stakes)
        self.queue = EventQueue()
        self.full_mode = config.has_trans and config.t_technique == "full"

        self.network = Network(
            self.queue,
            self.rng,
            DelayModel(config.b_delay, config.t_delay, DelayMode(config.delay_mode)),
            config.n_n,
            tx_propagation=self.full_mode,
        )
        self.workload = TxWorkload(
            self.world,
            self.queue,
            self.rng,
            WorkloadParams(
                has_trans=config.has_trans,
                technique=config.t_technique,
                tx_rate=config.t_n,
                tx_delay=config.t_delay,
                size_sampler=parse_sampler(config.t_size),
                price_sampler=parse_sampler(config.t_fee),
                capacity_model=config.capacity_model,
                block_capacity=config.b_size,
                block_interval=config.b_interval,
            ),
            self.network,
        )
        self.consensus = ConsensusEngine(
            self.world,
            self.queue,
            self.rng,
            ConsensusParams(
                block_interval=config.b_interval,
                selector=Selector(config.selector),
                uncles_enabled=config.uncles_enabled,
                max_uncles=config.u_max,
                uncle_window=config.g_uncle,
            ),
            self.network,
            self.workload,
            block_capacity=config.b_size,
        )
        self.handlers = {
            EventKind.BLOCK_CREATE: self.consensus.on_block_create,
            EventKind.BLOCK_RECEIVE: self.consensus.on_block_receive,
            EventKind.TX_CREATE: self.workload.on_tx_create,
            EventKind.TX_RECEIVE: self.workload.on_tx_receive,
        }

    def run(self) -> RunReport:
        started = time.perf_counter()
        self.workload.start()
        self.consensus.start()
        elapsed = run_loop(
            self.queue,
            self.handlers,
            self.world,
            sim_time=self.config.sim_time,
            block_target=self.config.block_target,
        )
        chain = main_chain(self.world)
        ledger = distribute(
            chain,
            self.world.registry,
            RewardParams(
                block_reward=self.config.b_reward,
                uncles_enabled=self.config.uncles_enabled,
                uncle_window=self.config.g_uncle,
                inclusion_fraction=self.config.inclusion_reward_fraction,
            ),
            self.world.nodes,
        )
        return summarize_run(
            self.world,
            chain,
            ledger,
            miner_ids=self.consensus.miner_ids,
            elapsed=elapsed,
            run_index=self.run_index,
            seed=self.seed,
            wall_clock=time.perf_counter() - started,
            full_mode=self.full_mode,
        )


def run_single(config: SimConfig, run_index: int = 0) -> RunReport:
    """Execute one simulation run and return its report."""
    return Simulation(config, run_index).run()


def run_many(config: SimConfig, parallel: int = 1) -> list[RunReport]:
    """Execute ``config.runs`` independent runs, ordered by run index."""
    indices = range(config.runs)
    if parallel <= 1 or config.runs == 1:
        return [run_single(config, i) for i in indices]
    workers = min(parallel, config.runs)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_single, [config] * config.runs, indices))
