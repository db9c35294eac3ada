"""Age-of-information simulator for a UAV swarm serving clustered IoT devices,
with a numpy DQN and centralised / multi-agent training schemes."""

__version__ = "0.1.0"
