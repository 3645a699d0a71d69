# Services orchestrating the workbench stages
