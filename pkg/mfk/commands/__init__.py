'''
Sub-command objects of `mfk.command.MFK`, one per group of verbs
'''
