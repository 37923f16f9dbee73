# FeederFlow - distribution feeder voltage profile solver and dissipativity checker
