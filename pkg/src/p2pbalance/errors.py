"""Exception types raised by the simulator."""


class ConfigError(ValueError):
    """Invalid or out-of-range configuration value."""


class UnknownHostError(KeyError):
    """A host id that is not (or no longer) part of the network."""


class ForbiddenExitError(RuntimeError):
    """Removing the last host would orphan every job."""


class ModelViolation(RuntimeError):
    """The simulation left the modelled regime (e.g. a network partition)."""


class ExperimentError(RuntimeError):
    """A trial aborted; carries the trial index and seed for reproduction."""

    def __init__(self, trial: int, seed: int, cause: Exception):
        super().__init__(f"trial {trial} (seed {seed}) aborted: {cause}")
        self.trial = trial
        self.seed = seed
        self.cause = cause
