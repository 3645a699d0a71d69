# Dynamic load identification workbench
