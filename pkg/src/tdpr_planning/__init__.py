"""Reserve sizing and endogenous co-optimisation inside expansion planning."""
