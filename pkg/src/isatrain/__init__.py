"""Gamified security-awareness training and assessment platform.

Subsystems: criterion taxonomy (`taxonomy`), score pipeline (`scoring`),
attack-simulation challenges (`challenges`), gamified feedback
(`gamification`), the event-sourced platform service and HTTP API (`service`,
`api`), and the agent-based experiment lab (`agents`, `simlab`).
"""

__version__ = "0.1.0"
