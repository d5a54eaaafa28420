# Scenario, SUMO and CSV input/output